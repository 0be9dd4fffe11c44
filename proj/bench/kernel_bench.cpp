// Times the reference loops against the parallel kernels on layer shapes of
// the canonical model and reports the largest elementwise difference.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "leafnet/kernels.hpp"
#include "leafnet/reference.hpp"
#include "leafnet/rng.hpp"

using namespace leafnet;

namespace {

Tensor random_tensor(const Shape& s, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
  Tensor t(s);
  for (auto& v : t.values()) v = static_cast<float>(rng_uniform(rng, lo, hi));
  return t;
}

double max_diff(const Tensor& a, const Tensor& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    d = std::max(d, std::fabs(static_cast<double>(a.values()[i]) - b.values()[i]));
  }
  return d;
}

double seconds(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void report(const char* name, double ref_s, double par_s, double diff) {
  std::printf("%-28s ref %9.3f ms  par %9.3f ms  speedup %6.2fx  max|diff| %.3g\n", name, ref_s * 1e3, par_s * 1e3,
              ref_s / par_s, diff);
}

void bench_conv(const char* name, std::int64_t n, std::int64_t hw, std::int64_t c, std::int64_t f, int reps,
                Rng& rng) {
  const Tensor x = random_tensor(Shape{n, hw, hw, c}, rng, 0.0f, 1.0f);
  const Tensor w = random_tensor(Shape{3, 3, c, f}, rng, -0.2f, 0.2f);
  const Tensor b = random_tensor(Shape{f}, rng);
  const Tensor g = random_tensor(Shape{n, hw, hw, f}, rng);

  Tensor yr, yp;
  const double rf = seconds([&] { yr = reference::conv2d_forward(x, w, b); }, reps);
  const double pf = seconds([&] { yp = kernels::conv2d_forward(x, w, b); }, reps);
  report((std::string(name) + " fwd").c_str(), rf, pf, max_diff(yr, yp));

  ConvGrads<float> gr, gp;
  const double rb = seconds([&] { gr = reference::conv2d_backward(x, w, g); }, reps);
  const double pb = seconds([&] { gp = kernels::conv2d_backward(x, w, g); }, reps);
  report((std::string(name) + " bwd").c_str(), rb, pb,
         std::max({max_diff(gr.input, gp.input), max_diff(gr.weights, gp.weights), max_diff(gr.bias, gp.bias)}));
}

void bench_dense(const char* name, std::int64_t n, std::int64_t k, std::int64_t u, int reps, Rng& rng) {
  const Tensor x = random_tensor(Shape{n, k}, rng, 0.0f, 1.0f);
  const Tensor w = random_tensor(Shape{k, u}, rng, -0.05f, 0.05f);
  const Tensor b = random_tensor(Shape{u}, rng);
  const Tensor g = random_tensor(Shape{n, u}, rng);

  Tensor yr, yp;
  const double rf = seconds([&] { yr = reference::dense_forward(x, w, b); }, reps);
  const double pf = seconds([&] { yp = kernels::dense_forward(x, w, b); }, reps);
  report((std::string(name) + " fwd").c_str(), rf, pf, max_diff(yr, yp));

  DenseGrads<float> gr, gp;
  const double rb = seconds([&] { gr = reference::dense_backward(x, w, g); }, reps);
  const double pb = seconds([&] { gp = kernels::dense_backward(x, w, g); }, reps);
  report((std::string(name) + " bwd").c_str(), rb, pb,
         std::max({max_diff(gr.input, gp.input), max_diff(gr.weights, gp.weights), max_diff(gr.bias, gp.bias)}));
}

void bench_pool(std::int64_t n, std::int64_t hw, std::int64_t c, int reps, Rng& rng) {
  const Tensor x = random_tensor(Shape{n, hw, hw, c}, rng);
  PoolResult<float> rr, rp;
  const double rf = seconds([&] { rr = reference::maxpool_forward(x); }, reps);
  const double pf = seconds([&] { rp = kernels::maxpool_forward(x); }, reps);
  report("maxpool fwd", rf, pf, max_diff(rr.output, rp.output));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference vs parallel kernel timings"};
  int batch = 32;
  std::int64_t size = 64;
  int reps = 3;
  int threads = 0;
  app.add_option("--batch", batch, "Batch size")->capture_default_str();
  app.add_option("--size", size, "Input side (the canonical model uses 180)")->capture_default_str();
  app.add_option("--reps", reps, "Timed repetitions")->capture_default_str();
  app.add_option("--threads", threads, "OpenMP threads");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  std::printf("threads=%d batch=%d size=%lld\n", omp_get_max_threads(), batch, static_cast<long long>(size));
  Rng rng(2024, 1);
  const std::int64_t s1 = size, s2 = size / 2, s3 = size / 4, s4 = size / 8;
  bench_conv("conv 3->16", batch, s1, 3, 16, reps, rng);
  bench_conv("conv 16->32", batch, s2, 16, 32, reps, rng);
  bench_conv("conv 32->64", batch, s3, 32, 64, reps, rng);
  bench_pool(batch, s1, 16, reps, rng);
  bench_dense("dense flat->128", batch, s4 * s4 * 64, 128, reps, rng);
  bench_dense("dense 128->8", batch, 128, 8, reps, rng);
  return 0;
}
