#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rsb/sweep.hpp"

using namespace rsb;

namespace {

SweepSpec weak_spec(std::size_t nL, std::size_t nt, double t_max = 60.0) {
  SweepSpec s;
  s.L_axis = {4.0, 20.0, nL, AxisSpacing::Linear};
  s.t_axis = {1.0, t_max, nt, AxisSpacing::Log};
  return s;
}

std::string csv(const SweepGrid& g) {
  std::ostringstream os;
  write_grid_csv(g, os);
  return os.str();
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, sep);) out.push_back(f);
  return out;
}

SweepGrid synthetic(const std::vector<double>& t, const std::vector<double>& L,
                    const std::function<double(double, double)>& f) {
  SweepGrid g;
  g.spec.t_axis = {t.front(), t.back(), t.size(), AxisSpacing::Linear};
  g.spec.L_axis = {L.front(), L.back(), L.size(), AxisSpacing::Linear};
  g.t_axis = t;
  g.L_axis = L;
  for (double tt : t) {
    for (double LL : L) {
      CellResult c;
      c.t = tt;
      c.L = LL;
      c.negativity = f(LL, tt);
      g.cells.push_back(c);
    }
  }
  return g;
}

}  // namespace

TEST(Axis, LinearAndLogValues) {
  const auto lin = AxisSpec{2.0, 4.0, 5, AxisSpacing::Linear}.values();
  EXPECT_EQ(lin, (std::vector<double>{2.0, 2.5, 3.0, 3.5, 4.0}));
  const auto lg = AxisSpec{1.0, 1e4, 5, AxisSpacing::Log}.values();
  ASSERT_EQ(lg.size(), 5u);
  EXPECT_EQ(lg.front(), 1.0);
  EXPECT_EQ(lg.back(), 1e4);
  for (std::size_t i = 1; i < lg.size(); ++i) EXPECT_NEAR(lg[i] / lg[i - 1], 10.0, 1e-12);
  EXPECT_EQ(AxisSpec(7.0, 7.0, 1, AxisSpacing::Log).values(), std::vector<double>{7.0});
}

TEST(Axis, Validation) {
  EXPECT_THROW((AxisSpec{1.0, 1.0, 3, AxisSpacing::Linear}.validate("t")), DomainError);
  EXPECT_THROW((AxisSpec{0.0, 1.0, 3, AxisSpacing::Log}.validate("t")), DomainError);
  EXPECT_THROW((AxisSpec{0.0, 1.0, 0, AxisSpacing::Linear}.validate("t")), DomainError);
  EXPECT_THROW((AxisSpec{1.0, 2.0, 1, AxisSpacing::Linear}.validate("t")), DomainError);
  SweepSpec s = weak_spec(2, 2);
  s.n = 6;
  EXPECT_THROW(s.validate(), DomainError);
  s = weak_spec(2, 2);
  s.lambdas = {0.01};
  EXPECT_THROW(s.validate(), DomainError);
}

TEST(Sweep, ZeroTimeAndZeroCouplingGiveZero) {
  const KernelEngine eng;
  SweepSpec s = weak_spec(1, 1);
  s.L_axis = {10.0, 10.0, 1, AxisSpacing::Linear};
  s.t_axis = {0.0, 0.0, 1, AxisSpacing::Linear};
  EXPECT_EQ(run_bipartite_map(s, eng).value(0, 0), 0.0);
  SweepSpec tri = s;
  tri.lambdas = {0.01, 0.01, 0.01};
  tri.deltas = {0.0, 0.0, 0.0};
  EXPECT_NEAR(run_tripartite_map(tri, eng).value(0, 0), 0.0, 1e-20);
  SweepSpec z = weak_spec(3, 4);
  z.lambdas = {0.0, 0.0};
  const auto g = run_bipartite_map(z, eng);
  for (const auto& c : g.cells) {
    EXPECT_TRUE(c.ok());
    EXPECT_EQ(c.value(), 0.0);
  }
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
  SweepSpec s = weak_spec(9, 12);
  s.threads = 1;
  const std::string one = csv(run_bipartite_map(s, KernelEngine{}));
  s.threads = 4;
  const std::string four = csv(run_bipartite_map(s, KernelEngine{}));
  EXPECT_EQ(one, four);
  SweepSpec t = s;
  t.L_axis.points = 4;
  t.t_axis.points = 5;
  t.lambdas = {0.5, 0.5, 0.5};
  t.deltas = {0.0, 0.0, 0.0};
  t.threads = 1;
  const std::string t1 = csv(run_tripartite_map(t, KernelEngine{}));
  t.threads = 3;
  EXPECT_EQ(t1, csv(run_tripartite_map(t, KernelEngine{})));
}

TEST(Sweep, WarmCacheMatchesCold) {
  const SweepSpec s = weak_spec(5, 8);
  const auto cold = run_bipartite_map(s, KernelEngine{});
  const KernelEngine cached(quad::Options{}, std::make_shared<KernelCache>());
  const auto first = run_bipartite_map(s, cached);
  const auto warm = run_bipartite_map(s, cached);
  EXPECT_GT(warm.meta.cache.hits, first.meta.cache.hits);
  for (std::size_t i = 0; i < cold.cells.size(); ++i) {
    EXPECT_NEAR(warm.cells[i].negativity, cold.cells[i].negativity, 1e-12);
    EXPECT_NEAR(warm.cells[i].xi, cold.cells[i].xi, 1e-12 * std::fabs(cold.cells[i].xi) + 1e-300);
  }
}

TEST(Sweep, SpacelikeCellsCarryNoEntanglement) {
  SweepSpec s;
  s.L_axis = {8.0, 40.0, 9, AxisSpacing::Linear};
  s.t_axis = {0.5, 35.0, 24, AxisSpacing::Linear};
  s.lambdas = {1.0, 1.0};
  const auto g = run_bipartite_map(s, KernelEngine{});
  std::size_t checked = 0;
  for (const auto& c : g.cells) {
    ASSERT_TRUE(c.ok()) << c.message;
    if (c.t <= c.L - 5.0) {
      EXPECT_LT(c.negativity, 1e-9) << "L = " << c.L << " t = " << c.t;
      // the commutator is not exactly zero, only Gaussian-small outside the cone
      EXPECT_LT(std::fabs(c.vartheta), 1e-8);
      ++checked;
    }
  }
  EXPECT_GT(checked, 50u);
}

TEST(Cone, SyntheticStepIsBracketed) {
  std::vector<double> t;
  for (int k = 0; k <= 40; ++k) t.push_back(k);
  const auto g = synthetic(t, {5.0, 10.0}, [](double L, double tt) { return tt >= 17.0 && L > 6.0 ? 1.0 : 0.0; });
  const auto cone = extract_cone(g, 1e-6);
  ASSERT_EQ(cone.points.size(), 1u);
  EXPECT_EQ(cone.points[0].L, 10.0);
  EXPECT_EQ(cone.points[0].t_star, 17.0);
  EXPECT_EQ(cone.points[0].t_lo, 16.0);
  EXPECT_EQ(cone.non_crossing, std::vector<double>{5.0});

  // a probe bisects the bracket
  const auto fine = extract_cone(g, 1e-6, [](double, double tt) { return tt >= 16.4 ? 1.0 : 0.0; });
  EXPECT_EQ(fine.points[0].t_star, 16.5);
  EXPECT_EQ(fine.points[0].t_lo, 16.0);
  const auto fine2 = extract_cone(g, 1e-6, [](double, double tt) { return tt >= 16.7 ? 1.0 : 0.0; });
  EXPECT_EQ(fine2.points[0].t_star, 17.0);
  EXPECT_EQ(fine2.points[0].t_lo, 16.5);
}

TEST(Cone, EmptyContourListsEveryColumn) {
  const auto g = synthetic({0.0, 1.0, 2.0}, {4.0, 5.0, 6.0}, [](double, double) { return 0.0; });
  const auto cone = extract_cone(g, 1e-6);
  EXPECT_TRUE(cone.empty());
  EXPECT_EQ(cone.non_crossing, (std::vector<double>{4.0, 5.0, 6.0}));
  std::ostringstream os;
  write_cone_csv(cone, os);
  EXPECT_EQ(os.str(), "L_over_sigma,t_star_over_sigma\n");
  EXPECT_THROW(extract_cone(g, -1.0), DomainError);
}

TEST(Cone, FailedCellStopsColumnSearch) {
  auto g = synthetic({0.0, 1.0, 2.0}, {4.0}, [](double, double tt) { return tt; });
  g.cells[1].status = "accuracy_error";
  const auto cone = extract_cone(g, 0.5);
  EXPECT_TRUE(cone.empty());
  EXPECT_EQ(cone.non_crossing, std::vector<double>{4.0});
}

TEST(Cone, StableUnderRefinement) {
  SweepSpec coarse;
  coarse.L_axis = {8.0, 20.0, 4, AxisSpacing::Linear};
  coarse.t_axis = {2.0, 120.0, 30, AxisSpacing::Log};
  coarse.lambdas = {1.0, 1.0};
  SweepSpec fine = coarse;
  fine.t_axis.points = 59;  // every coarse row is kept
  const KernelEngine eng(quad::Options{}, std::make_shared<KernelCache>());
  const auto cc = extract_cone(run_bipartite_map(coarse, eng), 1e-6, make_probe(coarse, eng));
  const auto cf = extract_cone(run_bipartite_map(fine, eng), 1e-6, make_probe(fine, eng));
  ASSERT_EQ(cc.points.size(), 4u);
  ASSERT_EQ(cf.points.size(), 4u);
  const double ratio = std::pow(120.0 / 2.0, 1.0 / 29.0);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(cc.points[i].L, cf.points[i].L);
    // at most one coarse cell apart in log t
    EXPECT_LE(std::fabs(std::log(cf.points[i].t_star / cc.points[i].t_star)), std::log(ratio) + 1e-12)
        << "L = " << cc.points[i].L;
    EXPECT_LE(cc.points[i].t_lo, cc.points[i].t_star);
  }
}

TEST(Sweep, FailuresStayInTheirCells) {
  SweepSpec s = weak_spec(3, 6, 500.0);
  // one wide panel with no refinement budget cannot resolve late times
  s.quad.periods_per_panel = 1e9;
  s.quad.max_panel_width = 100.0;
  s.quad.max_subdivision_evals = 0;
  const auto g = run_bipartite_map(s, KernelEngine{s.quad});
  std::size_t failed = 0;
  for (const auto& c : g.cells) {
    if (!c.ok()) {
      ++failed;
      EXPECT_EQ(c.status, "accuracy_error");
      EXPECT_FALSE(c.message.empty());
    }
  }
  EXPECT_EQ(failed, g.meta.failed);
  EXPECT_GT(failed, 0u);
  EXPECT_LT(failed, g.cells.size());
  EXPECT_TRUE(g.partial());
  const std::string text = csv(g);
  EXPECT_NE(text.find("nan,nan,nan,nan,nan"), std::string::npos);
  EXPECT_NE(text.find("accuracy_error"), std::string::npos);
}

TEST(Sweep, PartialThreshold) {
  auto g = synthetic(std::vector<double>(100, 0.0), {4.0}, [](double, double) { return 0.0; });
  g.meta.failed = 1;
  EXPECT_FALSE(g.partial());
  g.meta.failed = 2;
  EXPECT_TRUE(g.partial());
}

TEST(Output, BipartiteCsvColumns) {
  const auto g = run_bipartite_map(weak_spec(2, 3), KernelEngine{});
  std::istringstream is(csv(g));
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "L_over_sigma,t_over_sigma,negativity,kernel_gamma_A,kernel_gamma_B,vartheta,xi,n_evals,status");
  std::size_t rows = 0;
  for (std::string line; std::getline(is, line); ++rows) {
    const auto f = split(line);
    ASSERT_EQ(f.size(), 9u);
    EXPECT_EQ(f[8], "ok");
    EXPECT_EQ(std::stod(f[0]), g.cells[(rows % 3) * 2 + rows / 3].L);
  }
  EXPECT_EQ(rows, 6u);
}

TEST(Output, TripartiteCsvHasTangleColumns) {
  SweepSpec s = weak_spec(2, 2);
  s.t_axis = {0.0, 30.0, 2, AxisSpacing::Linear};
  s.lambdas = {0.01, 0.01, 0.01};
  s.deltas = {0.0, 0.0, 0.0};
  const auto g = run_tripartite_map(s, KernelEngine{});
  std::istringstream is(csv(g));
  std::string header;
  std::getline(is, header);
  const auto h = split(header);
  ASSERT_EQ(h.size(), 18u);
  EXPECT_EQ(h[15], "pi_raw");
  EXPECT_EQ(h[17], "ghz_type");
  for (std::string line; std::getline(is, line);) {
    const auto f = split(line);
    ASSERT_EQ(f.size(), 18u);
    if (std::stod(f[1]) == 0.0) {
      EXPECT_NEAR(std::stod(f[16]), 0.0, 1e-20);
    }
  }
}

TEST(Output, PpmHeaders) {
  const auto g = run_bipartite_map(weak_spec(3, 4), KernelEngine{});
  std::ostringstream os;
  HeatmapOptions opt;
  opt.cell_pixels = 5;
  write_heatmap_ppm(g, os, opt);
  const std::string img = os.str();
  EXPECT_EQ(img.rfind("P6\n15 20\n255\n", 0), 0u);
  EXPECT_EQ(img.size(), std::string("P6\n15 20\n255\n").size() + 15 * 20 * 3);

  SweepSpec s = weak_spec(1, 5);
  s.L_axis = {10.0, 10.0, 1, AxisSpacing::Linear};
  const auto sl = run_slice(s, KernelEngine{});
  std::ostringstream ls;
  write_line_ppm(sl, ls, 64, 32);
  EXPECT_EQ(ls.str().rfind("P6\n64 32\n255\n", 0), 0u);
  EXPECT_THROW(run_slice(weak_spec(2, 2), KernelEngine{}), DomainError);
}

TEST(Slice, ReportsMaximum) {
  SweepSpec s;
  s.lambdas = {1.0, 1.0};
  s.L_axis = {10.0, 10.0, 1, AxisSpacing::Linear};
  s.t_axis = {10.0, 200.0, 40, AxisSpacing::Log};
  const auto sl = run_slice(s, KernelEngine{});
  double mx = 0.0;
  for (const auto& c : sl.grid.cells) mx = std::max(mx, c.value());
  EXPECT_EQ(sl.max_value, mx);
  EXPECT_GT(mx, 0.0);
}
