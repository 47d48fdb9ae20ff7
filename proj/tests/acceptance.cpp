// Acceptance gates: each numbered criterion prints exactly one PASS/FAIL line.
// The end-to-end detection criteria (6-8) share one trained model and repeat
// the training run to verify bitwise determinism.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rdnet/augment.hpp"
#include "rdnet/detector.hpp"
#include "rdnet/grad_check.hpp"
#include "rdnet/losses.hpp"
#include "rdnet/network.hpp"
#include "rdnet/phantom.hpp"
#include "rdnet/targets.hpp"
#include "rdnet/trainer.hpp"

using namespace rdnet;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("criterion %d %-28s %s  (%s)\n", id, name, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- criterion 1
// Gradient correctness on a small model, in double precision so central
// differences are limited by the objective's smoothness, not float roundoff.
void criterion_gradients() {
#ifdef _OPENMP
  const int threads = omp_get_max_threads();
  omp_set_num_threads(1);
#endif
  const auto t0 = std::chrono::steady_clock::now();

  NetworkConfig net;
  net.input_dims = {32, 32, 16};
  net.base_channels = 4;
  net.dropout_rate = 0.f;
  Rng rng(3);
  std::vector<double> d(std::size_t(32) * 32 * 16);
  for (auto& v : d) v = rng.uniform(0, 1);
  auto vol = TensorT<double>::from_data({1, 16, 32, 32}, std::move(d));

  BoxAnnotation box;
  box.center = {16.f, 16.f, 8.f};
  box.size = {20.f, 18.f, 10.f};
  auto target = make_target<double>({box}, grid_dims(net), downsampling_rates(net), 1);

  Rng init(11);
  auto params = build_model<double>(net, init);
  auto f = [&] { return loss_total(model_forward(params, net, vol, false), target).total; };

  GradCheckOptions opts;
  opts.eps = 3e-6;
  opts.samples_per_param = 8;
  opts.rel_floor = 1e-4;
  double worst = 0.0;
  std::string worst_name;
  for (auto& [name, t] : params.named) {
    const double w = grad_check<double>(f, {t}, opts);
    if (w > worst) {
      worst = w;
      worst_name = name;
    }
  }
  const double secs = seconds_since(t0);
#ifdef _OPENMP
  omp_set_num_threads(threads);
#endif
  std::ostringstream msg;
  msg << "worst rel err " << worst << " at " << worst_name << ", " << int(secs) << " s";
  report(1, "gradient-correctness", worst < 1e-3 && secs < 300.0, msg.str());
}

// ---------------------------------------------------------------- criterion 2
// Shape contract at full scale: no weights, just the propagation plan.
void criterion_shapes() {
  NetworkConfig c;
  c.input_dims = {416, 288, 128};
  c.base_channels = 8;
  c.levels = 4;
  c.pool_sizes = {{1, 2, 2}, {2, 2, 2}, {2, 2, 2}, {2, 2, 2}};
  c.up_blocks = 1;
  c.feature_channels = 64;
  c.structures = 1;

  bool ok = grid_dims(c) == std::array<int, 3>{52, 36, 32} &&
            downsampling_rates(c) == std::array<int, 3>{8, 8, 4};
  const auto plan = shape_plan(c);
  ok = ok && plan.size() == 8;
  ok = ok && plan.front().second == std::array<int, 4>{1, 128, 288, 416};
  // the shared feature map carries k = 64 channels on the coarse grid
  ok = ok && plan[6].first == "up0" && plan[6].second == std::array<int, 4>{64, 32, 36, 52};
  ok = ok && plan.back().first == "rdn_output" &&
       plan.back().second == std::array<int, 4>{7, 32, 36, 52};
  report(2, "shape-contract", ok, "(416,288,128) -> grid (52,36,32), k=64, 7 channels");
}

// ---------------------------------------------------------------- criterion 3
// Target-field invariants plus decode round trip over random boxes.
void criterion_targets() {
  const std::array<int, 3> grid{8, 8, 12};
  const std::array<int, 3> rates{8, 8, 4};
  const std::array<float, 3> extent{float(grid[0] * rates[0]), float(grid[1] * rates[1]),
                                    float(grid[2] * rates[2])};
  Rng rng(17);
  int bad = 0;
  std::string first_bad;
  const std::int64_t cells = std::int64_t(grid[0]) * grid[1] * grid[2];
  for (int trial = 0; trial < 100; ++trial) {
    BoxAnnotation b;
    for (int a = 0; a < 3; ++a) {
      b.size[a] = float(rng.uniform(0.3, 0.9)) * extent[a];
      b.center[a] = float(rng.uniform(0.25, 0.75)) * extent[a];
    }
    auto field = make_target<float>({b}, grid, rates, 1);
    const auto& data = field.data.data();
    std::string why;

    // peak cell: the cell containing the center carries the field maximum
    std::array<int, 3> cc{};
    for (int a = 0; a < 3; ++a) cc[a] = int(b.center[a] / float(rates[a]));
    const std::int64_t peak = (std::int64_t(cc[2]) * grid[1] + cc[1]) * grid[0] + cc[0];
    float pmax = 0.f;
    std::int64_t arg = 0;
    for (std::int64_t i = 0; i < cells; ++i) {
      const float p = data[std::size_t(i)];
      if (p < 0.f || p > 1.f) why = "p out of [0,1]";
      if (p > pmax) {
        pmax = p;
        arg = i;
      }
    }
    if (arg != peak) why = "peak not at the center cell";

    for (std::int64_t i = 0; i < cells; ++i) {
      const int ix = int(i % grid[0]), iy = int(i / grid[0] % grid[1]), iz = int(i / (grid[0] * grid[1]));
      const std::array<float, 3> cell{(ix + 0.5f) * rates[0], (iy + 0.5f) * rates[1],
                                      (iz + 0.5f) * rates[2]};
      bool inside = true;
      for (int a = 0; a < 3; ++a)
        inside = inside && std::fabs(cell[a] - b.center[a]) < 0.5f * b.size[a];
      const float p = data[std::size_t(i)];
      if (!inside && p != 0.f) {
        // the pseudo probability must vanish once any axis leaves the box
        bool outside_axis = false;
        for (int a = 0; a < 3; ++a)
          outside_axis = outside_axis || std::fabs(cell[a] - b.center[a]) >= 0.5f * b.size[a];
        if (outside_axis) why = "nonzero p outside the box";
      }
      if (p > 0.f) {
        // exact normalized size everywhere the probability is positive
        for (int a = 0; a < 3; ++a) {
          const float s = data[std::size_t((4 + a) * cells + i)];
          if (std::fabs(s - b.size[a] / float(rates[a])) > 1e-5f) why = "size channel not exact";
        }
        // offsets record the cell's displacement from the box center
        for (int a = 0; a < 3; ++a) {
          const float t = data[std::size_t((1 + a) * cells + i)];
          if (std::fabs(t - (cell[a] - b.center[a]) / float(rates[a])) > 1e-5f)
            why = "offset channel wrong";
        }
      }
    }

    // decode recovers the annotation from its own target encoding
    BoxField bf;
    bf.structures = 1;
    bf.grid = grid;
    bf.rates = rates;
    bf.data = field.data;
    const auto dets = decode(bf, 0.1f, {1.f, 1.f, 1.f});
    if (dets.size() != 1) {
      why = "decode found no box";
    } else {
      for (int a = 0; a < 3; ++a) {
        if (std::fabs(dets[0].center_vox[a] - b.center[a]) > 0.5f * rates[a])
          why = "decoded center off by more than half a cell";
        if (std::fabs(dets[0].size_vox[a] - b.size[a]) > 1e-3f) why = "decoded size not exact";
      }
    }
    if (!why.empty()) {
      ++bad;
      if (first_bad.empty()) first_bad = why;
    }
  }
  report(3, "target-field-suite", bad == 0,
         bad == 0 ? "100/100 random boxes" : ("failures: " + std::to_string(bad) + ", first: " + first_bad));
}

// ---------------------------------------------------------------- criterion 4
// Loss identities and hand-computed values.
void criterion_losses() {
  std::string why;
  auto approx = [](double a, double b, double tol) { return std::fabs(a - b) <= tol; };

  // p_hat = 2p gives 1 - 4/5
  auto p = Tensor::from_data({4}, {0.1f, 0.4f, 0.7f, 1.0f});
  std::vector<float> h(4);
  for (int i = 0; i < 4; ++i) h[i] = 2.f * p.data()[i];
  if (!approx(double(loss_p(p, Tensor::from_data({4}, h)).value()), 0.2, 1e-6))
    why = "doubled-prediction value != 0.2";

  // disjoint supports saturate at 1
  auto dp = Tensor::from_data({3}, {0.f, 0.f, 0.9f});
  auto dh = Tensor::from_data({3}, {0.8f, 1.f, 0.f});
  if (!approx(double(loss_p(dp, dh).value()), 1.0, 1e-6)) why = "disjoint value != 1";

  // equality: zero loss; range: [0,1]
  Rng rng(5);
  std::vector<float> r(64);
  for (auto& v : r) v = float(rng.uniform(0.05, 1.0));
  auto rp = Tensor::from_data({64}, r);
  if (double(loss_p(rp, rp).value()) > 1e-6) why = "nonzero loss at equality";
  for (int t = 0; t < 50 && why.empty(); ++t) {
    std::vector<float> a(32), b(32);
    for (auto& v : a) v = float(rng.uniform(0.0, 1.0));
    for (auto& v : b) v = float(rng.uniform(0.0, 1.0));
    const double l =
        double(loss_p(Tensor::from_data({32}, a), Tensor::from_data({32}, b)).value());
    if (l < 0.0 || l > 1.0 + 1e-9) why = "loss left [0,1]";
  }

  // vector losses: hand values and joint-scaling invariance
  auto v1 = Tensor::from_data({3, 1, 1, 1}, {1.5f, 0.f, 0.f});
  auto h1 = Tensor::from_data({3, 1, 1, 1}, {1.0f, 0.f, 0.f});
  if (!approx(double(vector_ratio_loss(v1, h1, 1).value()), 0.2, 1e-6))
    why = "vector hand value != 0.2";
  auto v0 = Tensor::zeros({3, 2, 1, 1});
  auto h0 = Tensor::from_data({3, 2, 1, 1}, {3.f, 1.f, 0.f, 4.f, 2.f, 1.f});
  if (!approx(double(vector_ratio_loss(v0, h0, 1).value()), 1.0, 1e-6))
    why = "zero-prediction value != 1";
  std::vector<float> va(24), vb(24);
  for (auto& x : va) x = float(rng.uniform(0.05, 1.0));
  for (auto& x : vb) x = float(rng.uniform(0.05, 1.0));
  auto scale = [](const std::vector<float>& src, float k) {
    std::vector<float> out(src);
    for (auto& x : out) x *= k;
    return out;
  };
  const double base = double(vector_ratio_loss(Tensor::from_data({6, 2, 2, 1}, va),
                                               Tensor::from_data({6, 2, 2, 1}, vb), 2)
                                 .value());
  const double scaled = double(vector_ratio_loss(Tensor::from_data({6, 2, 2, 1}, scale(va, 7.f)),
                                                 Tensor::from_data({6, 2, 2, 1}, scale(vb, 7.f)), 2)
                                   .value());
  if (!approx(base, scaled, 1e-6)) why = "scaling changed the vector loss";

  report(4, "loss-suite", why.empty(), why.empty() ? "hand values and identities hold" : why);
}

// ---------------------------------------------------------------- criterion 5
// Elastic augmentation invariants.
void criterion_augmentation() {
  std::string why;

  // zero displacement reproduces the volume exactly
  Volume v = Volume::zeros({24, 20, 6});
  Rng rng(9);
  for (auto& x : v.data) x = float(rng.uniform(0, 1));
  DisplacementField zero;
  zero.width = 24;
  zero.height = 20;
  zero.dx.assign(std::size_t(24) * 20, 0.f);
  zero.dy.assign(std::size_t(24) * 20, 0.f);
  auto w = deform_volume(v, zero, Interp::Spline);
  for (std::size_t i = 0; i < v.data.size(); ++i)
    if (std::fabs(w.data[i] - v.data[i]) > 1e-5f) why = "zero field is not the identity";

  // a z-invariant volume stays z-invariant under the slice-wise warp
  Volume zi = Volume::zeros({24, 20, 6});
  for (int z = 0; z < 6; ++z)
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 24; ++x) zi.at(x, y, z) = std::sin(0.3f * x) + 0.2f * y;
  Rng frng(10);
  auto field = sample_field(frng, 24, 20, {4.f, 4.f});
  auto wz = deform_volume(zi, field, Interp::Spline);
  for (int z = 1; z < 6 && why.empty(); ++z)
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 24; ++x)
        if (wz.at(x, y, z) != wz.at(x, y, 0)) why = "slices diverged under the warp";

  // seeded determinism
  Rng a(11), b(11);
  auto fa = sample_field(a, 16, 16), fb = sample_field(b, 16, 16);
  if (fa.dx != fb.dx || fa.dy != fb.dy) why = "same seed produced different fields";

  // control-point std over 1e4 draws within 5% of sigma = 10
  Rng srng(12);
  double sum = 0, sum2 = 0;
  std::int64_t n = 0;
  for (int i = 0; i < 10000; ++i) {
    auto f = sample_field(srng, 8, 8, {10.f, 10.f});
    for (const auto& c : f.control)
      for (float d : c) {
        sum += d;
        sum2 += double(d) * d;
        ++n;
      }
  }
  const double sd = std::sqrt(sum2 / double(n) - (sum / double(n)) * (sum / double(n)));
  if (std::fabs(sd - 10.0) > 0.5) why = "control std " + std::to_string(sd) + " not within 5%";

  report(5, "augmentation-suite", why.empty(),
         why.empty() ? "identity, slice consistency, determinism, std " + std::to_string(sd) : why);
}

// ------------------------------------------------------- criteria 6, 7 and 8
struct DetectionRun {
  std::vector<LossReport> history;
  std::string low_table;
  int low_correct = 0, high_correct = 0;
  std::array<double, 3> low_cell_err{};  // mean |center error| in coarse cells
  int low_detected = 0, high_detected = 0;
  bool high_misses_quiet = true;  // every miss had p_max below the threshold
  double train_secs = 0;
};

std::vector<TrainSample> detection_dataset() {
  PhantomConfig pc;
  const auto low = NoiseModel::ct_like();
  std::vector<TrainSample> dataset;
  for (int i = 1; i <= 10; ++i) {
    Rng rng{std::uint64_t(i)};
    auto s = gen_phantom(pc, rng);
    auto noisy = apply_noise(s.volume, low, rng);
    TrainSample ts;
    ts.volume = volume_to_tensor(noisy);
    ts.boxes = {s.annotation};
    dataset.push_back(std::move(ts));
    Rng arng{1000 + std::uint64_t(i)};
    for (auto& aug : augment_dataset(noisy, {s.mask}, arng, 25, {4.f, 4.f})) {
      TrainSample t2;
      t2.volume = volume_to_tensor(aug.volume);
      t2.boxes = {box_from_mask(aug.masks[0], 0)};
      dataset.push_back(std::move(t2));
    }
  }
  return dataset;
}

DetectionRun run_detection_experiment(const std::vector<TrainSample>& dataset) {
  NetworkConfig net;  // 64x64x48 defaults
  net.dropout_rate = 0.2f;
  PhantomConfig pc;
  DetectionRun out;

  Rng init(42);
  auto params = build_model<float>(net, init);
  TrainConfig tc;
  tc.learning_rate = 1e-4;
  tc.max_steps = 2000;
  tc.seed = 7;
  tc.patience = 0;
  tc.checkpoint_every = 0;
  const auto t0 = std::chrono::steady_clock::now();
  auto res = train(params, net, dataset, tc);
  out.train_secs = seconds_since(t0);
  out.history = std::move(res.history);

  const auto rates = downsampling_rates(net);
  for (int mode = 0; mode < 2; ++mode) {
    std::vector<EvalCase> cases;
    int correct = 0, detected = 0;
    std::array<double, 3> err{};
    for (int i = 0; i < 10; ++i) {
      Rng rng{std::uint64_t((mode ? 200 : 100) + i + 1)};
      auto s = gen_phantom(pc, rng);
      auto noisy =
          apply_noise(s.volume, mode ? NoiseModel::cbct_like() : NoiseModel::ct_like(), rng);
      auto field = model_forward(params, net, volume_to_tensor(noisy), false);
      float pmax = 0.f;
      for (std::int64_t c = 0; c < field.cells(); ++c)
        pmax = std::max(pmax, field.data.data()[std::size_t(c)]);
      auto dets = decode(field, 0.1f, pc.spacing);
      EvalCase ec;
      ec.truth = s.annotation;
      ec.spacing = pc.spacing;
      if (dets.empty()) {
        if (mode == 1 && pmax >= 0.1f) out.high_misses_quiet = false;
      } else {
        ++detected;
        ec.detection = dets[0];
        bool inside = true;
        for (int a = 0; a < 3; ++a)
          inside = inside &&
                   std::fabs(dets[0].center_vox[a] - s.annotation.center[a]) <=
                       0.5f * s.annotation.size[a];
        correct += inside;
        if (mode == 0)
          for (int a = 0; a < 3; ++a)
            err[a] += std::fabs(dets[0].center_vox[a] - s.annotation.center[a]) / rates[a];
      }
      cases.push_back(std::move(ec));
    }
    if (mode == 0) {
      out.low_correct = correct;
      out.low_detected = detected;
      for (int a = 0; a < 3; ++a) out.low_cell_err[a] = err[a] / std::max(detected, 1);
      out.low_table = format_error_table(evaluate(cases));
    } else {
      out.high_correct = correct;
      out.high_detected = detected;
    }
  }
  return out;
}

void criteria_detection() {
  const auto dataset = detection_dataset();
  const auto first = run_detection_experiment(dataset);

  {
    std::ostringstream msg;
    msg << first.low_correct << "/10 correct, mean cell err (" << first.low_cell_err[0] << ", "
        << first.low_cell_err[1] << ", " << first.low_cell_err[2] << "), train "
        << int(first.train_secs) << " s";
    const bool ok = first.low_correct >= 9 && first.low_cell_err[0] <= 1.0 &&
                    first.low_cell_err[1] <= 1.0 && first.low_cell_err[2] <= 1.0 &&
                    first.train_secs < 7200.0;
    report(6, "phantom-detection", ok, msg.str());
  }
  {
    std::ostringstream msg;
    msg << first.high_correct << "/10 correct, " << (10 - first.high_detected)
        << " misses all below threshold: " << (first.high_misses_quiet ? "yes" : "no");
    report(7, "noise-generalization", first.high_correct >= 7 && first.high_misses_quiet,
           msg.str());
  }
  {
    const auto second = run_detection_experiment(dataset);
    bool same_history = first.history.size() == second.history.size();
    for (std::size_t i = 0; same_history && i < first.history.size(); ++i)
      same_history = first.history[i].l_total == second.history[i].l_total &&
                     first.history[i].l_p == second.history[i].l_p &&
                     first.history[i].l_c == second.history[i].l_c &&
                     first.history[i].l_s == second.history[i].l_s;
    const bool same_table = first.low_table == second.low_table;
    report(8, "determinism", same_history && same_table,
           std::string("loss history ") + (same_history ? "bitwise equal" : "differs") +
               ", detection table " + (same_table ? "identical" : "differs"));
  }
}

// ---------------------------------------------------------------- criterion 9
// Overfitting a single sample must at least halve the loss in 200 steps.
void criterion_overfit() {
  NetworkConfig net;
  net.dropout_rate = 0.2f;
  PhantomConfig pc;
  Rng rng(1);
  auto s = gen_phantom(pc, rng);
  auto noisy = apply_noise(s.volume, NoiseModel::ct_like(), rng);
  TrainSample ts;
  ts.volume = volume_to_tensor(noisy);
  ts.boxes = {s.annotation};

  Rng init(42);
  auto params = build_model<float>(net, init);
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.max_steps = 200;
  tc.patience = 0;
  tc.checkpoint_every = 0;
  auto res = train(params, net, {ts}, tc);
  const double ratio = res.history.back().l_total / res.history.front().l_total;
  std::ostringstream msg;
  msg << "L_total " << res.history.front().l_total << " -> " << res.history.back().l_total
      << " (ratio " << ratio << ")";
  report(9, "overfit-sanity", ratio < 0.5, msg.str());
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  criterion_gradients();
  criterion_shapes();
  criterion_targets();
  criterion_losses();
  criterion_augmentation();
  if (!quick) criteria_detection();
  criterion_overfit();
  std::printf("%s\n", g_failures == 0 ? "all criteria passed"
                                      : (std::to_string(g_failures) + " criteria failed").c_str());
  return g_failures == 0 ? 0 : 1;
}
