// Times the serial reference path against the OpenMP kernel on one backward
// interval of the built-in example, and checks that both produce identical
// node values.
#include <chrono>
#include <cmath>
#include <cstdio>

#include "bsdebranch/problems.hpp"

int main(int argc, char** argv) {
  using clock = std::chrono::steady_clock;
  int threads = 4;
  if (argc > 1) threads = std::atoi(argv[1]);

  bsde::Problem prob = bsde::make_problem("paper-example", 20, 10);
  bsde::SolverConfig cfg;
  cfg.n_h = 4;
  cfg.dx = 0.1;
  cfg.dt = 0.01;
  cfg.sample_cap = 2000;
  cfg.pilot = 2000;
  cfg.variance_target = 1.0;  // pilot == cap: fixed-size batches per node
  prob.horizon = 0.2;       // keep the benchmark short
  prob.analytic = nullptr;

  cfg.threads = 0;
  auto t0 = clock::now();
  const bsde::PicardState serial = bsde::run(prob, cfg);
  auto t1 = clock::now();
  cfg.threads = threads;
  const bsde::PicardState parallel = bsde::run(prob, cfg);
  auto t2 = clock::now();

  double diff = 0;
  for (std::size_t i = 0; i < serial.u.size(); ++i)
    diff = std::max(diff, bsde::sup_distance(serial.u[i], parallel.u[i]));

  const double ts = std::chrono::duration<double>(t1 - t0).count();
  const double tp = std::chrono::duration<double>(t2 - t1).count();
  std::printf("serial:   %8.3f s\n", ts);
  std::printf("omp(%d):   %8.3f s\n", threads, tp);
  std::printf("speedup:  %8.2fx\n", ts / tp);
  std::printf("max node difference: %g\n", diff);
  return diff == 0.0 ? 0 : 1;
}
