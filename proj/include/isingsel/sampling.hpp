#pragma once

// Samplers for the Ising model: sequential-scan Gibbs for general graphs,
// exact closed-form sampling for stars, and inverse-CDF sampling from the
// enumerated joint for small p.

#include "isingsel/error.hpp"
#include "isingsel/model.hpp"
#include "isingsel/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace isingsel {

/// n x p matrix of spins in {-1,+1}. Stored as doubles so that the solver can
/// use it directly as a design matrix.
class SampleSet {
public:
  SampleSet() = default;

  explicit SampleSet(Eigen::MatrixXd data) : data_(std::move(data)) {
    for (Eigen::Index i = 0; i < data_.size(); ++i) {
      const double v = data_.data()[i];
      detail::require(v == 1.0 || v == -1.0, "sample entries must be -1 or +1");
    }
  }

  int n() const { return static_cast<int>(data_.rows()); }
  int p() const { return static_cast<int>(data_.cols()); }
  const Eigen::MatrixXd &data() const { return data_; }

  /// Spin of 1-based vertex v in 0-based row i.
  int spin(int i, int v) const { return static_cast<int>(data_(i, v - 1)); }

  /// Bitstring index of row i in the JointTable encoding.
  std::uint64_t state_index(int i) const {
    std::uint64_t s = 0;
    for (int v = 0; v < p(); ++v)
      if (data_(i, v) > 0)
        s |= std::uint64_t{1} << v;
    return s;
  }

  friend bool operator==(const SampleSet &a, const SampleSet &b) {
    return a.data_.rows() == b.data_.rows() && a.data_.cols() == b.data_.cols() &&
           a.data_ == b.data_;
  }

private:
  Eigen::MatrixXd data_;
};

struct GibbsConfig {
  int burn_in_sweeps = 200;
  int thinning_sweeps = 5;
  std::uint64_t seed = 0;
};

inline SampleSet gibbs_sample(const IsingModel &model, int n, const GibbsConfig &config) {
  detail::require(n >= 1, "sample count must be positive");
  detail::require(config.burn_in_sweeps >= 0, "burn-in must be nonnegative");
  detail::require(config.thinning_sweeps >= 1, "thinning must be at least one sweep");
  const int p = model.p();
  Rng rng(config.seed);
  std::vector<int> x(static_cast<std::size_t>(p));
  for (int &s : x)
    s = rng.spin();

  auto sweep = [&] {
    for (int v = 0; v < p; ++v) {
      double a = 0.0;
      for (const auto &nb : model.weighted_neighbors0(v))
        a += nb.theta * x[static_cast<std::size_t>(nb.index)];
      x[static_cast<std::size_t>(v)] =
          rng.uniform() < detail::conditional_from_field(a, 1) ? 1 : -1;
    }
  };

  for (int k = 0; k < config.burn_in_sweeps; ++k)
    sweep();
  Eigen::MatrixXd data(n, p);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < config.thinning_sweeps; ++k)
      sweep();
    for (int v = 0; v < p; ++v)
      data(i, v) = x[static_cast<std::size_t>(v)];
  }
  return SampleSet(std::move(data));
}

/// Exact i.i.d. sampling for a star centred at vertex 1: the hub is uniform,
/// each spoke is drawn from its conditional given the hub, isolated vertices
/// are uniform.
inline SampleSet exact_star_sample(const IsingModel &model, int n, std::uint64_t seed) {
  detail::require(n >= 1, "sample count must be positive");
  detail::require(model.topology().family() == GraphFamily::star ||
                      model.topology().is_star_shaped(),
                  "exact star sampling needs a star topology rooted at vertex 1");
  const int p = model.p();
  std::vector<double> hub_coupling(static_cast<std::size_t>(p), 0.0);
  for (const auto &nb : model.weighted_neighbors0(0))
    hub_coupling[static_cast<std::size_t>(nb.index)] = nb.theta;

  Rng rng(seed);
  Eigen::MatrixXd data(n, p);
  for (int i = 0; i < n; ++i) {
    const int hub = rng.spin();
    data(i, 0) = hub;
    for (int v = 1; v < p; ++v) {
      const double theta = hub_coupling[static_cast<std::size_t>(v)];
      const double p_plus = detail::conditional_from_field(theta * hub, 1);
      data(i, v) = rng.uniform() < p_plus ? 1 : -1;
    }
  }
  return SampleSet(std::move(data));
}

inline SampleSet exact_enum_sample(const IsingModel &model, int n, std::uint64_t seed) {
  detail::require(n >= 1, "sample count must be positive");
  const JointTable table = enumerate_joint(model);
  std::vector<double> cdf(table.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    acc += table.probabilities[k];
    cdf[k] = acc;
  }
  const int p = model.p();
  Rng rng(seed);
  Eigen::MatrixXd data(n, p);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end())
      --it;
    const auto state = static_cast<std::uint64_t>(it - cdf.begin());
    for (int v = 1; v <= p; ++v)
      data(i, v - 1) = JointTable::spin(state, v);
  }
  return SampleSet(std::move(data));
}

/// mu(r,u) = (1/n) sum_i x_r x_u. Unit diagonal.
inline Eigen::MatrixXd empirical_moments(const SampleSet &samples) {
  detail::require(samples.n() >= 1, "moments need at least one sample");
  Eigen::MatrixXd m = (samples.data().transpose() * samples.data()) / samples.n();
  m.diagonal().setOnes();
  return m;
}

/// Empirical state frequencies in the JointTable index order.
inline std::vector<double> empirical_state_frequencies(const SampleSet &samples) {
  detail::require(samples.p() <= kMaxEnumerationVertices, "too many vertices to tabulate");
  std::vector<double> freq(std::size_t{1} << samples.p(), 0.0);
  for (int i = 0; i < samples.n(); ++i)
    freq[samples.state_index(i)] += 1.0;
  for (double &f : freq)
    f /= samples.n();
  return freq;
}

inline double total_variation(const std::vector<double> &a, const std::vector<double> &b) {
  detail::require(a.size() == b.size(), "distributions differ in support size");
  double tv = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    tv += std::abs(a[k] - b[k]);
  return 0.5 * tv;
}

// ---------------------------------------------------------------------------
// Text serialization
//
//   n=<int> p=<int>
//   n lines of p space-separated entries from {-1, 1}

inline void write_samples(std::ostream &os, const SampleSet &samples) {
  os << "n=" << samples.n() << " p=" << samples.p() << '\n';
  std::string line;
  for (int i = 0; i < samples.n(); ++i) {
    line.clear();
    for (int v = 0; v < samples.p(); ++v) {
      if (v)
        line += ' ';
      line += samples.data()(i, v) > 0 ? "1" : "-1";
    }
    line += '\n';
    os << line;
  }
}

inline SampleSet read_samples(std::istream &is) {
  std::string ntok, ptok;
  if (!(is >> ntok >> ptok))
    throw IoError("missing sample header");
  const int n = detail::parse_header_int(ntok, "n");
  const int p = detail::parse_header_int(ptok, "p");
  if (n < 1 || p < 1)
    throw IoError("sample header must have n >= 1 and p >= 1");
  Eigen::MatrixXd data(n, p);
  std::string tok;
  for (int i = 0; i < n; ++i)
    for (int v = 0; v < p; ++v) {
      if (!(is >> tok))
        throw IoError("sample file truncated at row " + std::to_string(i + 1));
      if (tok == "1")
        data(i, v) = 1.0;
      else if (tok == "-1")
        data(i, v) = -1.0;
      else
        throw IoError("invalid sample entry '" + tok + "' at row " + std::to_string(i + 1));
    }
  if (is >> tok)
    throw IoError("trailing data after " + std::to_string(n) + " rows");
  return SampleSet(std::move(data));
}

} // namespace isingsel
