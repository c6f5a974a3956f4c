// Copyright 2026 The dcanet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dcanet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dcanet/ops.hpp"

namespace dcanet {

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (passed() ? "pass" : "FAIL") << " coords=" << entries.size() << " max_rel_err=" << max_rel_error
     << " tol=" << tolerance;
  if (kinks > 0) os << " kinks_skipped=" << kinks;
  for (const auto& e : entries) {
    if (e.rel_error > tolerance) {
      os << "\n  index " << e.index << ": analytic " << e.analytic << " numeric " << e.numeric << " rel "
         << e.rel_error;
    }
  }
  return os.str();
}

double relative_error(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return scale < 1e-10 ? diff : diff / scale;
}

namespace {

// The one-sided gap (L(v+s) - 2L(v) + L(v-s)) / s is s * L''(v) for smooth L,
// so it halves with s. A kink at distance d < s keeps it near the slope jump
// until s drops below d, where it falls to zero. Requiring two successive
// halvings rules out every single kink position.
bool straddles_kink(const std::function<double()>& loss, double& value, double base, double step,
                    double second_difference) {
  const double saved = value;
  auto gap = [&](double s) {
    value = saved + s;
    const double plus = loss();
    value = saved - s;
    const double minus = loss();
    value = saved;
    return (plus + minus - 2.0 * base) / s;
  };
  const double g1 = second_difference / step;
  const double g2 = gap(step / 2);
  const double g4 = gap(step / 4);
  auto halves = [](double wide, double narrow) {
    const double r = narrow / wide;
    return r >= 0.4 && r <= 0.6;
  };
  return !(halves(g1, g2) && halves(g2, g4));
}

}  // namespace

GradCheckReport central_difference_check(const std::function<double()>& loss, std::span<double> values,
                                         std::span<const double> analytic, int count, uint64_t seed,
                                         double step, double tolerance) {
  GradCheckReport report;
  report.tolerance = tolerance;
  const auto order = coordinate_order(static_cast<int64_t>(values.size()), seed);
  const size_t wanted = std::min(order.size(), static_cast<size_t>(std::max(count, 0)));
  const double base = loss();
  for (const int64_t c : order) {
    if (report.entries.size() == wanted || report.kinks >= count) break;
    const auto i = static_cast<size_t>(c);
    const double saved = values[i];
    values[i] = saved + step;
    const double plus = loss();
    values[i] = saved - step;
    const double minus = loss();
    values[i] = saved;
    if (relative_error((plus - base) / step, (base - minus) / step) > tolerance &&
        straddles_kink(loss, values[i], base, step, plus + minus - 2.0 * base)) {
      ++report.kinks;
      continue;
    }
    GradCheckEntry e;
    e.index = c;
    e.analytic = analytic[i];
    e.numeric = (plus - minus) / (2.0 * step);
    e.rel_error = relative_error(e.analytic, e.numeric);
    report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    if (!(e.rel_error <= tolerance)) ++report.failures;
    report.entries.push_back(e);
  }
  if (report.entries.size() < wanted) ++report.failures;
  return report;
}

std::vector<int64_t> coordinate_order(int64_t n, uint64_t seed) {
  std::vector<int64_t> all(static_cast<size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  return all;
}

GradCheckReport grad_check(const TensorFn& f, const Tensor<double>& x, double step, double tolerance, int coordinates,
                           uint64_t seed) {
  if (step < 1e-6 || step > 1e-2) throw Error("grad_check: step must lie in [1e-6, 1e-2]");

  Tensor<double> projection;
  auto scalar_loss = [&](Tape<double>& tape, Var<double> in) {
    Var<double> out = f(tape, in);
    if (out.value().numel() == 1) return out;
    if (projection.empty()) {
      projection = Tensor<double>(out.shape());
      std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
      std::uniform_real_distribution<double> u(0.5, 1.5);
      for (double& v : projection.data()) v = u(rng);
    }
    return sum_all(mul(out, tape.constant(projection)));
  };

  Tape<double> tape;
  Var<double> in = tape.leaf(x, true);
  Var<double> loss = scalar_loss(tape, in);
  tape.backward(loss);
  const Tensor<double>* g = tape.grad_if(in.id());
  const Tensor<double> zeros(x.shape());
  const Tensor<double>& grad = g != nullptr ? *g : zeros;

  Tensor<double> probe = x;
  auto eval = [&] {
    Tape<double> t;
    return scalar_loss(t, t.leaf(probe, false)).value()[0];
  };
  return central_difference_check(eval, probe.data(), grad.data(), coordinates, seed, step, tolerance);
}

}  // namespace dcanet
