#include "stss/numerics/grad_check.hpp"

#include "stss/error.hpp"
#include "stss/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stss::num {
namespace {

void check_epsilon(float eps) {
  if (!(eps >= 1e-4f && eps <= 1e-2f)) throw ContractError("grad_check: epsilon must lie in [1e-4, 1e-2]");
}

double relative_error(double analytic, double numeric, double floor) {
  if (!std::isfinite(analytic) || !std::isfinite(numeric)) throw NumericError("grad_check: non-finite gradient");
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / denom;
}

} // namespace

float grad_check(const TensorOp& op, const std::vector<Tensor>& inputs, const GradCheckOptions& opts) {
  check_epsilon(opts.epsilon);
  std::size_t total = 0;
  for (const auto& t : inputs) {
    require_finite(t.data(), "grad_check input");
    total += t.numel();
  }
  if (total > opts.max_elements) throw ContractError("grad_check: inputs too large for finite differences");

  std::vector<Tensor> work;
  for (const auto& t : inputs) work.push_back(Tensor(t.shape(), std::vector<float>(t.data().begin(), t.data().end()), true));

  Tensor probe_out = op(work);
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<float> uni(-1.0f, 1.0f);
  std::vector<float> r(probe_out.numel());
  for (auto& v : r) v = uni(rng);

  auto objective = [&]() -> double {
    Tensor out = op(work);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += static_cast<double>(out.data()[i]) * r[i];
    return acc;
  };

  weighted_sum(probe_out, r).backward();
  double worst = 0.0;
  for (auto& t : work) {
    std::vector<float> analytic = t.has_grad() ? std::vector<float>(t.grad().begin(), t.grad().end())
                                               : std::vector<float>(t.numel(), 0.0f);
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const float orig = t.data()[i];
      t.data()[i] = orig + opts.epsilon;
      const double plus = objective();
      t.data()[i] = orig - opts.epsilon;
      const double minus = objective();
      t.data()[i] = orig;
      const double numeric = (plus - minus) / (2.0 * opts.epsilon);
      worst = std::max(worst, relative_error(analytic[i], numeric, opts.denominator_floor));
    }
  }
  return static_cast<float>(worst);
}

float grad_check_probes(const std::function<Tensor()>& objective, const std::vector<GradProbe>& probes,
                        const GradCheckOptions& opts) {
  check_epsilon(opts.epsilon);
  for (const auto& p : probes) {
    if (!p.tensor.defined() || p.index >= p.tensor.numel()) throw ContractError("grad_check: probe out of range");
    Tensor t = p.tensor;
    t.zero_grad();
  }
  Tensor loss = objective();
  loss.backward();
  std::vector<double> analytic;
  for (const auto& p : probes) analytic.push_back(p.tensor.has_grad() ? p.tensor.grad()[p.index] : 0.0);

  double worst = 0.0;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    Tensor t = probes[k].tensor;
    const std::size_t i = probes[k].index;
    const float orig = t.data()[i];
    t.data()[i] = orig + opts.epsilon;
    const double plus = objective().item();
    t.data()[i] = orig - opts.epsilon;
    const double minus = objective().item();
    t.data()[i] = orig;
    const double numeric = (plus - minus) / (2.0 * opts.epsilon);
    worst = std::max(worst, relative_error(analytic[k], numeric, opts.denominator_floor));
  }
  return static_cast<float>(worst);
}

} // namespace stss::num
