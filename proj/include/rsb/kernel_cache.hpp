#ifndef RSB_KERNEL_CACHE_HPP
#define RSB_KERNEL_CACHE_HPP

// Thread-safe memo table for unit-coupling kernel integrals, with a
// versioned binary file format.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "rsb/error.hpp"

namespace rsb {

enum class KernelId : std::uint8_t {
  Gamma = 1,     // decay exponent, L-independent
  PairPhase = 2, // vartheta and xi, integrated together
  RegSelf = 3,   // A_alpha, self term of R_alpha
  RegCross = 4,  // B_alpha(L), cross term of R_alpha
};

struct KernelKey {
  KernelId id = KernelId::Gamma;
  std::int32_t n = 0;
  std::int32_t alpha = 0;
  double t = 0.0;
  double L = 0.0;
  double m = 0.0;
  // quadrature settings that affect the value
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  double u_max = 0.0;
  double periods_per_panel = 0.0;
  double max_panel_width = 0.0;

  bool operator==(const KernelKey& o) const {
    auto same = [](double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); };
    return id == o.id && n == o.n && alpha == o.alpha && same(t, o.t) && same(L, o.L) && same(m, o.m) &&
           same(rel_tol, o.rel_tol) && same(abs_tol, o.abs_tol) && same(u_max, o.u_max) &&
           same(periods_per_panel, o.periods_per_panel) && same(max_panel_width, o.max_panel_width);
  }
};

namespace detail {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

template <class T>
std::uint64_t fnv_mix(std::uint64_t h, const T& v) {
  return fnv1a(&v, sizeof(T), h);
}

}  // namespace detail

struct KernelKeyHash {
  std::size_t operator()(const KernelKey& k) const {
    std::uint64_t h = detail::kFnvOffset;
    h = detail::fnv_mix(h, static_cast<std::uint8_t>(k.id));
    h = detail::fnv_mix(h, k.n);
    h = detail::fnv_mix(h, k.alpha);
    for (double v : {k.t, k.L, k.m, k.rel_tol, k.abs_tol, k.u_max, k.periods_per_panel, k.max_panel_width}) {
      h = detail::fnv_mix(h, std::bit_cast<std::uint64_t>(v));
    }
    return static_cast<std::size_t>(h);
  }
};

/// Up to two integral values per key (the pair kernels are fused).
struct KernelEntry {
  double v0 = 0.0;
  double v1 = 0.0;
  double rel_err = 0.0;  // worst estimated relative error of the stored values
  std::uint64_t n_evals = 0;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t inserts = 0;
  std::uint64_t entries = 0;
  std::uint64_t loaded = 0;
};

class KernelCache {
 public:
  static constexpr char kMagic[8] = {'R', 'S', 'B', 'K', 'C', 'A', 'C', 'H'};
  static constexpr std::uint32_t kVersion = 1;

  std::optional<KernelEntry> find(const KernelKey& key) const {
    std::shared_lock lock(mutex_);
    auto it = map_.find(key);
    if (it == map_.end()) {
      misses_.fetch_add(1, std::memory_order_relaxed);
      return std::nullopt;
    }
    hits_.fetch_add(1, std::memory_order_relaxed);
    return it->second;
  }

  /// Concurrent inserts of the same key are harmless: values are deterministic.
  void insert(const KernelKey& key, const KernelEntry& e) {
    std::unique_lock lock(mutex_);
    map_[key] = e;
    inserts_.fetch_add(1, std::memory_order_relaxed);
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return map_.size();
  }

  CacheStats stats() const {
    CacheStats s;
    s.hits = hits_.load();
    s.misses = misses_.load();
    s.inserts = inserts_.load();
    s.entries = size();
    s.loaded = loaded_;
    return s;
  }

  void clear() {
    std::unique_lock lock(mutex_);
    map_.clear();
  }

  /// Writes all entries in a canonical order so identical contents give
  /// identical files.
  void save(const std::string& path) const {
    std::vector<std::pair<KernelKey, KernelEntry>> items;
    {
      std::shared_lock lock(mutex_);
      items.assign(map_.begin(), map_.end());
    }
    auto order = [](const KernelKey& k) {
      auto b = [](double v) { return std::bit_cast<std::uint64_t>(v); };
      return std::make_tuple(static_cast<int>(k.id), k.n, k.alpha, b(k.t), b(k.L), b(k.m), b(k.rel_tol),
                             b(k.abs_tol), b(k.u_max), b(k.periods_per_panel), b(k.max_panel_width));
    };
    std::sort(items.begin(), items.end(),
              [&order](const auto& a, const auto& b) { return order(a.first) < order(b.first); });
    std::vector<unsigned char> buf;
    auto put = [&buf](const auto& v) {
      const auto* p = reinterpret_cast<const unsigned char*>(&v);
      buf.insert(buf.end(), p, p + sizeof(v));
    };
    buf.insert(buf.end(), kMagic, kMagic + 8);
    put(kVersion);
    put(static_cast<std::uint64_t>(items.size()));
    for (const auto& [k, e] : items) {
      put(static_cast<std::uint8_t>(k.id));
      put(k.n);
      put(k.alpha);
      for (double v : {k.t, k.L, k.m, k.rel_tol, k.abs_tol, k.u_max, k.periods_per_panel, k.max_panel_width,
                       e.v0, e.v1, e.rel_err}) {
        put(v);
      }
      put(e.n_evals);
    }
    put(detail::fnv1a(buf.data(), buf.size()));
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("kernel cache: cannot write " + tmp);
      out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
      if (!out) throw Error("kernel cache: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("kernel cache: cannot rename " + tmp);
  }

  /// Merges entries from a cache file. A missing file is not an error;
  /// a corrupt or foreign-version file throws.
  void load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return;
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    auto get = [&](auto& v) {
      if (pos + sizeof(v) > buf.size()) throw Error("kernel cache: truncated file " + path);
      std::memcpy(&v, buf.data() + pos, sizeof(v));
      pos += sizeof(v);
    };
    if (buf.size() < 8 + 4 + 8 + 8 || std::memcmp(buf.data(), kMagic, 8) != 0) {
      throw Error("kernel cache: " + path + " is not a kernel cache file");
    }
    pos = 8;
    std::uint32_t version = 0;
    get(version);
    if (version != kVersion) {
      throw Error("kernel cache: " + path + " has version " + std::to_string(version) + ", expected " +
                  std::to_string(kVersion));
    }
    std::uint64_t stored_hash = 0;
    std::memcpy(&stored_hash, buf.data() + buf.size() - 8, 8);
    if (detail::fnv1a(buf.data(), buf.size() - 8) != stored_hash) {
      throw Error("kernel cache: checksum mismatch in " + path);
    }
    std::uint64_t count = 0;
    get(count);
    std::vector<std::pair<KernelKey, KernelEntry>> items;
    for (std::uint64_t i = 0; i < count; ++i) {
      KernelKey k;
      KernelEntry e;
      std::uint8_t id = 0;
      get(id);
      k.id = static_cast<KernelId>(id);
      get(k.n);
      get(k.alpha);
      for (double* v : {&k.t, &k.L, &k.m, &k.rel_tol, &k.abs_tol, &k.u_max, &k.periods_per_panel,
                        &k.max_panel_width, &e.v0, &e.v1, &e.rel_err}) {
        get(*v);
      }
      get(e.n_evals);
      items.emplace_back(k, e);
    }
    if (pos + 8 != buf.size()) throw Error("kernel cache: trailing bytes in " + path);
    std::unique_lock lock(mutex_);
    for (auto& [k, e] : items) map_[k] = e;
    loaded_ += count;
  }

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<KernelKey, KernelEntry, KernelKeyHash> map_;
  mutable std::atomic<std::uint64_t> hits_{0};
  mutable std::atomic<std::uint64_t> misses_{0};
  std::atomic<std::uint64_t> inserts_{0};
  std::uint64_t loaded_ = 0;
};

}  // namespace rsb

#endif  // RSB_KERNEL_CACHE_HPP
