// Tabulates f for a few chains and compares E X*_t with g(t) on simulated paths.

#include <cstdio>

#include <skipfree/skipfree.hpp>

int main() {
  using namespace skipfree;

  for (double mu : {0.5, 1.0, 2.0}) {
    const auto g = mm1(1.0, mu);
    const auto s = compute_scale(g, 4000);
    std::printf("mm1(1, %.1f): f_10 = %.4f, f_100 = %.4g\n", mu, s.f_at(10), s.f_at(100));

    for (double t : {10.0, 100.0, 1000.0}) {
      const auto paths = simulate_paths(g, 0, StoppingRule::fixed(t), 4000, 7);
      RunningMoments max;
      for (const auto& p : paths) max.add(static_cast<double>(p.x_star));
      const auto r = max.report();
      std::printf("  t = %6.0f  E X*_t = %8.3f +- %.3f   g(t) = %8.3f\n", t, r.mean, r.std_error, s.g_eval(t));
    }
  }

  const auto cat = catastrophe(1.0, 1.0);
  const auto s = compute_scale(cat, 2000);
  std::printf("catastrophe(1, 1): g(1e6) = %.4f, f_1000 overflows: %s\n", s.g_eval(1e6), s.overflowed() ? "yes" : "no");
}
