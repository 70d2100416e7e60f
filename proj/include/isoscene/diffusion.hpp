#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "isoscene/error.hpp"
#include "isoscene/random.hpp"
#include "isoscene/raster.hpp"

namespace isoscene {

using Sample = RealGrid;

// Cumulative noise schedule alpha_bar[t], t in [0, T).
class DiffusionSchedule {
 public:
  DiffusionSchedule() = default;

  static DiffusionSchedule from_alpha_bar(std::vector<double> alpha_bar) {
    if (alpha_bar.empty()) throw Error("schedule: at least one step required");
    for (std::size_t t = 0; t < alpha_bar.size(); ++t) {
      const double a = alpha_bar[t];
      if (!std::isfinite(a) || a < 0.0 || a > 1.0) throw Error("schedule: alpha_bar must lie in [0, 1]");
      if (t > 0 && a > alpha_bar[t - 1]) throw Error("schedule: alpha_bar must be non-increasing");
    }
    DiffusionSchedule s;
    s.alpha_bar_ = std::move(alpha_bar);
    return s;
  }

  // alpha_bar linear in t from `first` to `last`.
  static DiffusionSchedule linear(int steps, double first = 0.9999, double last = 1e-4) {
    if (steps < 1) throw Error("schedule: at least one step required");
    std::vector<double> a(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t) {
      a[static_cast<std::size_t>(t)] = steps == 1 ? first : first + (last - first) * t / (steps - 1.0);
    }
    return from_alpha_bar(std::move(a));
  }

  int steps() const { return static_cast<int>(alpha_bar_.size()); }
  double alpha_bar(int t) const {
    check(t);
    return alpha_bar_[static_cast<std::size_t>(t)];
  }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

  // Continuous u in [0, 1] snapped to the nearest step index.
  int index_for_unit(double u) const {
    const double clamped = std::clamp(u, 0.0, 1.0);
    return static_cast<int>(std::lround(clamped * (steps() - 1)));
  }

  void check(int t) const {
    if (t < 0 || t >= steps()) {
      throw Error("timestep " + std::to_string(t) + " out of range [0, " + std::to_string(steps()) + ")");
    }
  }

 private:
  std::vector<double> alpha_bar_;
};

inline void require_same_shape(const Sample& a, const Sample& b, const char* what) {
  if (!a.same_shape(b)) throw Error(std::string(what) + ": shape mismatch");
}

inline void require_mask_for(const Mask& m, const Sample& x, const char* what) {
  if (m.channels() != 1 || !m.same_extent(x)) throw Error(std::string(what) + ": mask shape mismatch");
}

inline double mask_value(const Mask& m, std::size_t sample_index, int channels) {
  return m[sample_index / static_cast<std::size_t>(channels)] ? 1.0 : 0.0;
}

// x_t = sqrt(ab) x0 + sqrt(1 - ab) eps
inline Sample forward_diffuse(const Sample& x0, int t, const Sample& eps, const DiffusionSchedule& schedule) {
  schedule.check(t);
  require_same_shape(x0, eps, "forward_diffuse");
  const double ab = schedule.alpha_bar(t);
  const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
  Sample out(x0.width(), x0.height(), x0.channels());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = sa * x0[i] + sn * eps[i];
  return out;
}

// (1 - m) * x0, mask broadcast across channels.
inline Sample keep_unmasked(const Sample& x0, const Mask& m) {
  require_mask_for(m, x0, "keep_unmasked");
  Sample out(x0.width(), x0.height(), x0.channels());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = (1.0 - mask_value(m, i, x0.channels())) * x0[i];
  return out;
}

// m * x0
inline Sample keep_masked(const Sample& x0, const Mask& m) {
  require_mask_for(m, x0, "keep_masked");
  Sample out(x0.width(), x0.height(), x0.channels());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = mask_value(m, i, x0.channels()) * x0[i];
  return out;
}

// Channel concatenation [sample | mask | context]: 2C + 1 channels.
inline Sample concat_channels(const Sample& sample, const Mask& m, const Sample& context) {
  require_same_shape(sample, context, "concat_channels");
  require_mask_for(m, sample, "concat_channels");
  const int C = sample.channels();
  Sample out(sample.width(), sample.height(), 2 * C + 1);
  for (int y = 0; y < sample.height(); ++y) {
    for (int x = 0; x < sample.width(); ++x) {
      for (int c = 0; c < C; ++c) out.at(x, y, c) = sample.at(x, y, c);
      out.at(x, y, C) = m.at(x, y) ? 1.0 : 0.0;
      for (int c = 0; c < C; ++c) out.at(x, y, C + 1 + c) = context.at(x, y, c);
    }
  }
  return out;
}

// cat(x_t, m, E((1 - m) x0)) with E the identity.
inline Sample assemble_inpaint_input(const Sample& x_t, const Mask& m, const Sample& x0) {
  require_same_shape(x_t, x0, "assemble_inpaint_input");
  return concat_channels(x_t, m, keep_unmasked(x0, m));
}

// Inputs the noise predictor sees for one call.
struct PredictorInput {
  const Sample& noisy;
  const Mask& mask;
  const Sample& context;
  int t;
  std::span<const double> cond;
};

// Returns predicted noise with the shape of `noisy`; must be deterministic.
using EpsilonPredictor = std::function<Sample(const PredictorInput&)>;

inline Sample call_predictor(const EpsilonPredictor& f, const PredictorInput& in) {
  Sample out = f(in);
  if (!out.same_shape(in.noisy)) throw Error("predictor returned a sample of the wrong shape");
  return out;
}

struct InpaintSample {
  Sample x0;
  Mask mask;  // 1 = region that is noised and supervised
  std::vector<double> cond;
};

// m * x_t + (1 - m) * x0: noised inside the mask, clean outside.
inline Sample partial_noised(const Sample& x0, const Mask& m, int t, const Sample& eps,
                             const DiffusionSchedule& schedule) {
  const Sample xt = forward_diffuse(x0, t, eps, schedule);
  require_mask_for(m, x0, "partial_noised");
  Sample out(x0.width(), x0.height(), x0.channels());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double mv = mask_value(m, i, x0.channels());
    out[i] = mv * xt[i] + (1.0 - mv) * x0[i];
  }
  return out;
}

// Unmasked noise-prediction loss: mean over all elements of (eps - eps_theta(y_t))^2.
inline double full_loss(const EpsilonPredictor& predictor, const InpaintSample& s, int t, const Sample& eps,
                        const DiffusionSchedule& schedule) {
  const Sample xt = forward_diffuse(s.x0, t, eps, schedule);
  const Sample context = keep_unmasked(s.x0, s.mask);
  const Sample pred = call_predictor(predictor, {xt, s.mask, context, t, s.cond});
  double acc = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = eps[i] - pred[i];
    acc += d * d;
  }
  return acc / static_cast<double>(eps.size());
}

// Masked loss on partially noised input; the predictor context is E(m * x0).
// Mean over the elements where m = 1.
inline double partial_loss(const EpsilonPredictor& predictor, const InpaintSample& s, int t, const Sample& eps,
                           const DiffusionSchedule& schedule) {
  const std::size_t support = count_set(s.mask);
  if (support == 0) throw Error("empty supervision region");
  const Sample xt_hat = partial_noised(s.x0, s.mask, t, eps, schedule);
  const Sample context = keep_masked(s.x0, s.mask);
  const Sample pred = call_predictor(predictor, {xt_hat, s.mask, context, t, s.cond});
  const int C = s.x0.channels();
  double acc = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = mask_value(s.mask, i, C) * (eps[i] - pred[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(support * static_cast<std::size_t>(C));
}

// Intersection m_pfg * m_random * m_bg.
inline Mask make_training_mask(const Mask& pseudo_fg, const Mask& random_shape, const Mask& background) {
  if (!pseudo_fg.same_shape(random_shape) || !pseudo_fg.same_shape(background) || pseudo_fg.channels() != 1) {
    throw Error("make_training_mask: shape mismatch");
  }
  Mask out(pseudo_fg.width(), pseudo_fg.height(), 1, 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (pseudo_fg[i] && random_shape[i] && background[i]) ? 1 : 0;
  }
  return out;
}

// Union of a few seeded random ellipses covering roughly a third of the grid.
inline Mask random_blob_mask(int width, int height, std::uint64_t seed, int blobs = 4) {
  std::mt19937_64 rng(seed);
  Mask m(width, height, 1, 0);
  for (int b = 0; b < blobs; ++b) {
    const double cx = unit_uniform(rng) * width;
    const double cy = unit_uniform(rng) * height;
    const double rx = (0.15 + 0.35 * unit_uniform(rng)) * width + 0.5;
    const double ry = (0.15 + 0.35 * unit_uniform(rng)) * height + 0.5;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
        if (dx * dx + dy * dy <= 1.0) m.at(x, y) = 1;
      }
    }
  }
  return m;
}

struct SudDiagnostics {
  int t = 0;
  double alpha_bar = 0.0;
  bool unrolled = false;
  Sample eps;
  Mask mask;
  Mask mask_hat;
  Sample x_t;
  Sample x_pred_hat;  // first-pass clean estimate
  Sample x_t_hat;     // re-noised first-pass estimate
  Sample eps_bar;     // recomputed noise target
  Sample second_input;  // noisy input of the supervised pass
  Sample target;        // noise the supervised pass is scored against
  Sample prediction;
};

struct SudStepResult {
  double loss = 0.0;
  SudDiagnostics diag;
};

struct SudStepOptions {
  bool unroll = false;
  // Pseudo-foreground masks to draw m_pfg and m_hat from; empty means all-ones.
  std::span<const Mask> pseudo_foreground;
  // Predictor for the no-gradient first pass; defaults to the trained predictor.
  const EpsilonPredictor* first_pass = nullptr;
};

inline Sample predicted_clean(const Sample& x_t, const Sample& eps_pred, double ab) {
  const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
  Sample out(x_t.width(), x_t.height(), x_t.channels());
  for (std::size_t i = 0; i < x_t.size(); ++i) out[i] = (x_t[i] - sn * eps_pred[i]) / sa;
  return out;
}

// One inpainting training step with optional step-unrolled denoising. The
// first-pass output is a constant: nothing downstream differentiates or refits
// through it.
inline SudStepResult sud_training_step(const EpsilonPredictor& predictor, const Sample& x0, const Mask& m_bg,
                                       std::span<const double> cond, std::uint64_t seed,
                                       const DiffusionSchedule& schedule, const SudStepOptions& opts = {}) {
  require_mask_for(m_bg, x0, "sud_training_step");
  std::mt19937_64 rng(seed);
  SudStepResult res;
  SudDiagnostics& d = res.diag;
  d.t = schedule.index_for_unit(unit_uniform(rng));
  d.alpha_bar = schedule.alpha_bar(d.t);
  const double ab = d.alpha_bar;
  d.unrolled = opts.unroll;
  if (opts.unroll && (ab <= 0.0 || ab >= 1.0)) throw Error("degenerate schedule step");

  std::normal_distribution<double> normal(0.0, 1.0);
  d.eps = Sample(x0.width(), x0.height(), x0.channels());
  for (auto& v : d.eps.storage()) v = normal(rng);

  const std::uint64_t mask_seed = rng();
  const Mask all_ones(x0.width(), x0.height(), 1, 1);
  Mask pfg = all_ones;
  if (!opts.pseudo_foreground.empty()) {
    pfg = opts.pseudo_foreground[static_cast<std::size_t>(rng() % opts.pseudo_foreground.size())];
    if (!pfg.same_shape(all_ones)) throw Error("pseudo-foreground mask shape mismatch");
  }
  const Mask random_shape = random_blob_mask(x0.width(), x0.height(), mask_seed);
  d.mask = make_training_mask(pfg, random_shape, m_bg);
  d.x_t = forward_diffuse(x0, d.t, d.eps, schedule);

  const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
  if (opts.unroll) {
    d.mask_hat = pfg;
    const Sample ctx_hat = keep_unmasked(x0, d.mask_hat);
    const EpsilonPredictor& first = opts.first_pass != nullptr ? *opts.first_pass : predictor;
    const Sample eps_hat = call_predictor(first, {d.x_t, d.mask_hat, ctx_hat, d.t, {}});
    d.x_pred_hat = predicted_clean(d.x_t, eps_hat, ab);
    d.x_t_hat = Sample(x0.width(), x0.height(), x0.channels());
    d.eps_bar = Sample(x0.width(), x0.height(), x0.channels());
    for (std::size_t i = 0; i < x0.size(); ++i) {
      d.x_t_hat[i] = sa * d.x_pred_hat[i] + sn * d.eps[i];
      d.eps_bar[i] = (d.x_t_hat[i] - sa * x0[i]) / sn;
    }
    d.second_input = d.x_t_hat;
    d.target = d.eps_bar;
  } else {
    d.second_input = d.x_t;
    d.target = d.eps;
  }
  const Sample ctx = keep_unmasked(x0, d.mask);
  d.prediction = call_predictor(predictor, {d.second_input, d.mask, ctx, d.t, cond});
  double acc = 0.0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double e = d.target[i] - d.prediction[i];
    acc += e * e;
  }
  res.loss = acc / static_cast<double>(x0.size());
  return res;
}

// Bayes-optimal noise predictor for scalar data x0 ~ N(mu, sigma2); ignores
// mask, context and conditioning.
inline double gaussian_posterior_mean(double x_t, double mu, double sigma2, double ab) {
  const double sa = std::sqrt(ab);
  return mu + (sa * sigma2 / (ab * sigma2 + 1.0 - ab)) * (x_t - sa * mu);
}

inline double analytic_gaussian_eps(double x_t, double mu, double sigma2, double ab) {
  return (x_t - std::sqrt(ab) * gaussian_posterior_mean(x_t, mu, sigma2, ab)) / std::sqrt(1.0 - ab);
}

inline EpsilonPredictor analytic_gaussian_predictor(double mu, double sigma2, const DiffusionSchedule& schedule) {
  if (!(sigma2 > 0.0)) throw Error("analytic predictor: sigma2 must be positive");
  return [mu, sigma2, schedule](const PredictorInput& in) {
    const double ab = schedule.alpha_bar(in.t);
    Sample out(in.noisy.width(), in.noisy.height(), in.noisy.channels());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = analytic_gaussian_eps(in.noisy[i], mu, sigma2, ab);
    return out;
  };
}

// eps_hat(x_t) = a * x_t + b, one (a, b) per contiguous block of timesteps.
struct LinearBin {
  int t_begin = 0;
  int t_end = 0;  // exclusive
  double a = 0.0;
  double b = 0.0;
  double residual_mse = 0.0;
  std::size_t samples = 0;
};

struct LinearPredictor {
  std::vector<LinearBin> bins;
  std::vector<int> bin_of_step;

  double predict(double x_t, int t) const {
    const auto& bin = bins[static_cast<std::size_t>(bin_of_step.at(static_cast<std::size_t>(t)))];
    return bin.a * x_t + bin.b;
  }

  EpsilonPredictor as_predictor() const {
    return [self = *this](const PredictorInput& in) {
      Sample out(in.noisy.width(), in.noisy.height(), in.noisy.channels());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = self.predict(in.noisy[i], in.t);
      return out;
    };
  }
};

inline LinearPredictor make_linear_bins(int steps, int t_bins) {
  if (t_bins < 1) throw Error("linear predictor: at least one bin required");
  if (t_bins > steps) throw Error("degenerate bin: more bins than schedule steps");
  LinearPredictor p;
  p.bin_of_step.resize(static_cast<std::size_t>(steps));
  for (int b = 0; b < t_bins; ++b) {
    LinearBin bin;
    bin.t_begin = static_cast<int>(static_cast<long long>(b) * steps / t_bins);
    bin.t_end = static_cast<int>(static_cast<long long>(b + 1) * steps / t_bins);
    for (int t = bin.t_begin; t < bin.t_end; ++t) p.bin_of_step[static_cast<std::size_t>(t)] = b;
    p.bins.push_back(bin);
  }
  return p;
}

// Running sums for a one-variable least-squares fit.
struct LeastSquares {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  // x is accumulated relative to the first observation to limit cancellation.
  double shift = 0;

  void add(double x, double y) {
    if (n == 0) shift = x;
    x -= shift;
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }

  // Adds one observation given by its moments (E x, E y, E x^2, E xy, E y^2).
  void add_moments(double ex, double ey, double exx, double exy, double eyy) {
    if (n == 0) shift = ex;
    n += 1;
    sx += ex - shift;
    sy += ey;
    sxx += exx - 2 * shift * ex + shift * shift;
    sxy += exy - shift * ey;
    syy += eyy;
  }

  // Returns false when x has no spread.
  bool solve(double& a, double& b) const {
    if (n < 1) return false;
    const double mx = sx / n, my = sy / n;
    const double cxx = sxx / n - mx * mx;
    const double cxy = sxy / n - mx * my;
    if (!(cxx > 1e-300)) return false;
    a = cxy / cxx;
    b = my - a * (mx + shift);
    return true;
  }

  double residual(double a, double b) const {
    // mean (y - a x - b)^2 in centered form to limit cancellation
    const double mx = sx / n, my = sy / n;
    const double cxx = sxx / n - mx * mx, cxy = sxy / n - mx * my, cyy = syy / n - my * my;
    const double bias = my - a * (mx + shift) - b;
    return std::max(0.0, cyy - 2 * a * cxy + a * a * cxx) + bias * bias;
  }
};

struct LinearFitOptions {
  int t_bins = 10;
  std::size_t samples_per_bin = 100000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

// Closed-form per-bin least squares of eps on x_t. x0 and t are Monte Carlo
// draws (x0 from the dataset, t uniform within the bin); the N(0,1) noise is
// integrated out exactly, so each draw contributes its conditional moments.
// Each bin draws from its own derived seed, so the result does not depend on
// the worker count.
inline LinearPredictor fit_linear_predictor(std::span<const double> dataset, const DiffusionSchedule& schedule,
                                            const LinearFitOptions& opts) {
  if (dataset.empty()) throw Error("fit_linear_predictor: empty dataset");
  if (opts.samples_per_bin < 2) throw Error("degenerate bin: too few samples");
  LinearPredictor p = make_linear_bins(schedule.steps(), opts.t_bins);
  std::vector<std::string> errors(p.bins.size());

  auto fit_bin = [&](std::size_t b) {
    LinearBin& bin = p.bins[b];
    std::mt19937_64 rng(derive_seed(opts.seed, b));
    LeastSquares ls;
    const int span = bin.t_end - bin.t_begin;
    for (std::size_t k = 0; k < opts.samples_per_bin; ++k) {
      const int t = bin.t_begin + static_cast<int>(rng() % static_cast<std::uint64_t>(span));
      const double ab = schedule.alpha_bar(t);
      const double x0 = dataset[static_cast<std::size_t>(rng() % dataset.size())];
      const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
      ls.add_moments(sa * x0, 0.0, ab * x0 * x0 + (1.0 - ab), sn, 1.0);
    }
    if (!ls.solve(bin.a, bin.b)) {
      errors[b] = "degenerate bin [" + std::to_string(bin.t_begin) + ", " + std::to_string(bin.t_end) + ")";
      return;
    }
    bin.residual_mse = ls.residual(bin.a, bin.b);
    bin.samples = static_cast<std::size_t>(ls.n);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(opts.workers, static_cast<unsigned>(p.bins.size())));
  if (workers == 1) {
    for (std::size_t b = 0; b < p.bins.size(); ++b) fit_bin(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t b = w; b < p.bins.size(); b += workers) fit_bin(b);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(e);
  }
  return p;
}

struct SudTrainOptions {
  int rounds = 20;
  int steps_per_round = 2000;
  int batch = 64;
  int t_bins = 20;
  bool unroll = false;
  double unroll_start = 0.5;  // fraction of rounds before unrolled steps begin
  std::uint64_t seed = 0;
};

struct SudTrainResult {
  LinearPredictor predictor;
  std::vector<double> loss_curve;     // mean step loss per round, before that round's refit
  std::vector<bool> round_unrolled;
  double final_loss = 0.0;            // mean step loss of the final predictor on a fresh round
};

// Desk-scale training loop: every round runs sud_training_step on batches of
// scalar data with the current linear predictor, then refits each bin in
// closed form on the (second-pass input, target) pairs it produced.
inline SudTrainResult train_linear_with_sud(std::span<const double> dataset, const DiffusionSchedule& schedule,
                                            const SudTrainOptions& opts) {
  if (dataset.empty()) throw Error("train: empty dataset");
  if (opts.rounds < 1 || opts.steps_per_round < 1 || opts.batch < 1) throw Error("train: invalid options");
  SudTrainResult res;
  res.predictor = make_linear_bins(schedule.steps(), opts.t_bins);
  const int unroll_from = static_cast<int>(std::ceil(opts.unroll_start * opts.rounds));
  std::mt19937_64 data_rng(derive_seed(opts.seed, 0xda7a));
  const Mask bg(opts.batch, 1, 1, 1);

  auto run_round = [&](int round, bool unrolled, std::vector<LeastSquares>* stats) {
    const LinearPredictor snapshot = res.predictor;
    const EpsilonPredictor current = snapshot.as_predictor();
    double loss = 0.0;
    Sample x0(opts.batch, 1, 1);
    for (int s = 0; s < opts.steps_per_round; ++s) {
      for (auto& v : x0.storage()) v = dataset[static_cast<std::size_t>(data_rng() % dataset.size())];
      SudStepOptions so;
      so.unroll = unrolled;
      const auto seed = derive_seed(opts.seed, static_cast<std::uint64_t>(round) * 1000003ULL + s);
      const SudStepResult r = sud_training_step(current, x0, bg, {}, seed, schedule, so);
      loss += r.loss;
      if (stats != nullptr) {
        auto& ls = (*stats)[static_cast<std::size_t>(snapshot.bin_of_step[static_cast<std::size_t>(r.diag.t)])];
        for (std::size_t i = 0; i < x0.size(); ++i) ls.add(r.diag.second_input[i], r.diag.target[i]);
      }
    }
    return loss / opts.steps_per_round;
  };

  for (int round = 0; round < opts.rounds; ++round) {
    const bool unrolled = opts.unroll && round >= unroll_from;
    std::vector<LeastSquares> stats(res.predictor.bins.size());
    res.loss_curve.push_back(run_round(round, unrolled, &stats));
    res.round_unrolled.push_back(unrolled);
    for (std::size_t b = 0; b < stats.size(); ++b) {
      auto& bin = res.predictor.bins[b];
      double a, bb;
      if (stats[b].solve(a, bb)) {
        bin.a = a;
        bin.b = bb;
        bin.residual_mse = stats[b].residual(a, bb);
        bin.samples = static_cast<std::size_t>(stats[b].n);
      }
    }
  }
  const bool last_unrolled = opts.unroll && opts.rounds - 1 >= unroll_from;
  res.final_loss = run_round(opts.rounds, last_unrolled, nullptr);
  return res;
}

// Standard DDPM ancestral sampling from pure noise with posterior variance.
inline std::vector<double> ancestral_sample(const EpsilonPredictor& predictor, const DiffusionSchedule& schedule,
                                            std::uint64_t seed, int n) {
  if (n < 0) throw Error("ancestral_sample: negative sample count");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Sample x(n, 1, 1);
  for (auto& v : x.storage()) v = normal(rng);
  const Mask unknown(n, 1, 1, 1);
  const Sample no_context(n, 1, 1, 0.0);
  for (int t = schedule.steps() - 1; t >= 0; --t) {
    const double ab = schedule.alpha_bar(t);
    const double ab_prev = t > 0 ? schedule.alpha_bar(t - 1) : 1.0;
    if (ab <= 0.0 || ab >= 1.0) throw Error("degenerate schedule step");
    const double beta = 1.0 - ab / ab_prev;
    const Sample eps = call_predictor(predictor, {x, unknown, no_context, t, {}});
    const double coef = beta / std::sqrt(1.0 - ab);
    const double scale = 1.0 / std::sqrt(1.0 - beta);
    const double sigma = t > 0 ? std::sqrt((1.0 - ab_prev) / (1.0 - ab) * beta) : 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double v = scale * (x[i] - coef * eps[i]);
      if (t > 0) v += sigma * normal(rng);
      x[i] = v;
    }
  }
  return x.storage();
}

}  // namespace isoscene
