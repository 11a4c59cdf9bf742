#include "mtefree/simulate.hpp"

#include <cmath>

#include "mtefree/common.hpp"

namespace mtefree {

namespace {

double preset_pi(PropensityPreset preset, const Eigen::VectorXd& xc) {
  switch (preset) {
    case PropensityPreset::sin_wave:
    case PropensityPreset::sin_wave_centered:
      return 0.5 + 0.4 * std::sin(xc[0]);
    case PropensityPreset::probit:
      return normal_cdf(xc[0]);
    case PropensityPreset::cubic:
      return 0.2 + 0.6 * normal_cdf(xc[0] * xc[0] * xc[0]);
    case PropensityPreset::hetero_index:
      return normal_cdf(xc[0] / std::exp(0.75 * xc[0]));
    case PropensityPreset::interaction:
      return 0.1 + 0.8 * normal_cdf(xc[0] + xc[1] + xc[0] * xc[1]);
    case PropensityPreset::single_index:
      return 0.1 + 0.8 * normal_cdf(xc[0] + 0.5 * xc[1]);
  }
  return 0.5;
}

void draw_covariates(PropensityPreset preset, Rng& rng, Eigen::Ref<Eigen::VectorXd> xc) {
  switch (preset) {
    case PropensityPreset::sin_wave:
      xc[0] = rng.uniform() * 2.0 * M_PI;
      break;
    case PropensityPreset::sin_wave_centered:
      xc[0] = -M_PI + rng.uniform() * 2.0 * M_PI;
      break;
    case PropensityPreset::probit:
    case PropensityPreset::cubic:
      xc[0] = -2.0 + 4.0 * rng.uniform();
      break;
    case PropensityPreset::hetero_index:
      xc[0] = -1.0 + 3.0 * rng.uniform();
      break;
    case PropensityPreset::interaction:
    case PropensityPreset::single_index:
      xc[0] = -1.0 + 2.0 * rng.uniform();
      xc[1] = -1.0 + 2.0 * rng.uniform();
      break;
  }
  // Extra continuous dims beyond what the preset shapes use.
  for (Eigen::Index k = preset == PropensityPreset::interaction ||
                                 preset == PropensityPreset::single_index
                             ? 2
                             : 1;
       k < xc.size(); ++k)
    xc[k] = -1.0 + 2.0 * rng.uniform();
}

int preset_min_cont(PropensityPreset preset) {
  return (preset == PropensityPreset::interaction ||
          preset == PropensityPreset::single_index)
             ? 2
             : 1;
}

}  // namespace

double DgpSpec::propensity_at(const Eigen::VectorXd& xc, const Eigen::VectorXi& xd) const {
  double p = preset_pi(propensity, xc);
  for (Eigen::Index k = 0; k < xd.size(); ++k)
    p += disc_shift * (static_cast<double>(xd[k]) - 0.5);
  return p;
}

void DgpSpec::validate() const {
  if (n <= 0) throw ConfigError("simulate", "n must be positive");
  if (dim_cont < preset_min_cont(propensity))
    throw ConfigError("simulate", "propensity preset needs more continuous covariates");
  if (dim_disc < 0) throw ConfigError("simulate", "dim_disc must be nonnegative");
  if (noise_scale < 0.0) throw ConfigError("simulate", "noise scale must be nonnegative");
  const int k = dim_cont + dim_disc;
  if (beta0.size() != 0 && beta0.size() != k)
    throw ConfigError("simulate", "beta0 has wrong length");
  if (beta1.size() != 0 && beta1.size() != k)
    throw ConfigError("simulate", "beta1 has wrong length");
  // Probe the propensity range on the covariate support.
  Rng probe(mix_seed(seed, 0x70726f6265));
  Eigen::VectorXd xc(dim_cont);
  Eigen::VectorXi xd(dim_disc);
  for (int rep = 0; rep < 256; ++rep) {
    draw_covariates(propensity, probe, xc);
    for (int c = 0; c < dim_disc; ++c) xd[c] = probe.uniform_int(2);
    const double p = propensity_at(xc, xd);
    if (!(p > 0.0 && p < 1.0))
      throw ConfigError("simulate", "propensity leaves (0,1) on the covariate support");
  }
}

DgpSpec preset_dgp(const std::string& name, int n, std::uint64_t seed) {
  DgpSpec spec;
  spec.n = n;
  spec.seed = seed;
  if (name == "separable") {
    // Centered covariate keeps the treatment-interaction part of the
    // whole-sample residual small, which both procedures appreciate.
    spec.propensity = PropensityPreset::sin_wave_centered;
    spec.dim_cont = 1;
    spec.dim_disc = 1;
    spec.disc_shift = 0.18;  // score support nearly spans (0, 1)
    spec.alpha0 = 0.0;
    spec.alpha1 = 0.4;
    spec.beta0 = Eigen::Vector2d(1.0, 0.5);
    spec.beta1 = Eigen::Vector2d(1.2, 0.6);
    spec.rho0 = 0.15;
    spec.rho1 = 0.4;
    spec.noise_scale = 0.4;
  } else if (name == "sin") {
    spec.propensity = PropensityPreset::sin_wave;
    spec.alpha1 = 0.4;
    spec.beta0 = Eigen::VectorXd::Constant(1, 1.0);
    spec.beta1 = Eigen::VectorXd::Constant(1, 1.0);
    spec.rho0 = 0.2;
    spec.rho1 = 0.5;
    spec.noise_scale = 0.5;
  } else if (name == "probit") {
    spec.propensity = PropensityPreset::probit;
    spec.alpha1 = 0.4;
    spec.beta0 = Eigen::VectorXd::Constant(1, 1.0);
    spec.beta1 = Eigen::VectorXd::Constant(1, 1.0);
    spec.rho0 = 0.2;
    spec.rho1 = 0.5;
    spec.noise_scale = 0.5;
  } else if (name == "cubic") {
    spec.propensity = PropensityPreset::cubic;
    spec.alpha1 = 0.4;
    spec.beta0 = Eigen::VectorXd::Constant(1, 1.0);
    spec.beta1 = Eigen::VectorXd::Constant(1, 1.0);
    spec.rho0 = 0.2;
    spec.rho1 = 0.5;
    spec.noise_scale = 0.5;
  } else if (name == "hetero") {
    spec.propensity = PropensityPreset::hetero_index;
    spec.alpha1 = 0.4;
    spec.beta0 = Eigen::VectorXd::Constant(1, 1.0);
    spec.beta1 = Eigen::VectorXd::Constant(1, 1.2);
    spec.rho0 = 0.2;
    spec.rho1 = 0.5;
    spec.noise_scale = 0.5;
  } else if (name == "interaction") {
    spec.propensity = PropensityPreset::interaction;
    spec.dim_cont = 2;
    spec.alpha1 = 0.4;
    spec.beta0 = Eigen::Vector2d(1.0, -0.5);
    spec.beta1 = Eigen::Vector2d(1.2, -0.3);
    spec.rho0 = 0.2;
    spec.rho1 = 0.5;
    spec.noise_scale = 0.5;
  } else if (name == "single_index") {
    spec.propensity = PropensityPreset::single_index;
    spec.dim_cont = 2;
    spec.alpha1 = 0.4;
    spec.beta0 = Eigen::Vector2d(1.0, -0.5);
    spec.beta1 = Eigen::Vector2d(1.2, -0.3);
    spec.rho0 = 0.2;
    spec.rho1 = 0.5;
    spec.noise_scale = 0.5;
  } else {
    std::string known;
    for (const auto& p : preset_names()) known += (known.empty() ? "" : ", ") + p;
    throw ConfigError("simulate", "unknown preset '" + name + "' (known: " + known + ")");
  }
  return spec;
}

std::vector<std::string> preset_names() {
  return {"separable", "sin", "probit", "cubic", "hetero", "interaction", "single_index"};
}

double OracleMte::mte(const Eigen::VectorXd& x, double v) const {
  return (alpha1 - alpha0) + x.dot(beta_diff()) + (rho1 - rho0) * normal_quantile(v);
}

double OracleMte::ate(const Eigen::VectorXd& x) const {
  return (alpha1 - alpha0) + x.dot(beta_diff());
}

double OracleMte::tt(const Eigen::VectorXd& x, double pi_x) const {
  if (!(pi_x > 0.0 && pi_x < 1.0))
    throw ConfigError("simulate", "pi_x must lie strictly inside (0,1)");
  const double z = normal_quantile(pi_x);
  return ate(x) - (rho1 - rho0) * normal_pdf(z) / pi_x;
}

double OracleMte::tut(const Eigen::VectorXd& x, double pi_x) const {
  if (!(pi_x > 0.0 && pi_x < 1.0))
    throw ConfigError("simulate", "pi_x must lie strictly inside (0,1)");
  const double z = normal_quantile(pi_x);
  return ate(x) + (rho1 - rho0) * normal_pdf(z) / (1.0 - pi_x);
}

double OracleMte::late(const Eigen::VectorXd& x, double v1, double v2) const {
  if (!(v1 < v2) || !(v1 >= 0.0) || !(v2 <= 1.0))
    throw ConfigError("simulate", "need 0 <= v1 < v2 <= 1");
  const double f1 = v1 > 0.0 ? normal_pdf(normal_quantile(v1)) : 0.0;
  const double f2 = v2 < 1.0 ? normal_pdf(normal_quantile(v2)) : 0.0;
  return ate(x) + (rho1 - rho0) * (f1 - f2) / (v2 - v1);
}

double OracleMte::structural(int arm, const Eigen::VectorXd& mean_x, double v) const {
  const double alpha = arm == 1 ? alpha1 : alpha0;
  const double rho = arm == 1 ? rho1 : rho0;
  const Eigen::VectorXd& beta = arm == 1 ? beta1 : beta0;
  return mean_x.dot(beta) + alpha + rho * normal_quantile(v);
}

std::pair<Sample, OracleMte> generate(const DgpSpec& spec, Eigen::VectorXd* v_out) {
  spec.validate();
  const int k = spec.dim_cont + spec.dim_disc;
  const Eigen::VectorXd beta0 =
      spec.beta0.size() == k ? spec.beta0 : Eigen::VectorXd::Zero(k);
  const Eigen::VectorXd beta1 =
      spec.beta1.size() == k ? spec.beta1 : Eigen::VectorXd::Zero(k);

  Sample s;
  s.y.resize(spec.n);
  s.d.resize(spec.n);
  s.x_cont.resize(spec.n, spec.dim_cont);
  s.x_disc.resize(spec.n, spec.dim_disc);
  for (int c = 0; c < spec.dim_cont; ++c) s.cont_names.push_back("x" + std::to_string(c + 1));
  for (int c = 0; c < spec.dim_disc; ++c) s.disc_names.push_back("z" + std::to_string(c + 1));

  Rng rng(mix_seed(spec.seed, 0x6467656e));
  if (v_out) v_out->resize(spec.n);
  Eigen::VectorXd xc(spec.dim_cont);
  Eigen::VectorXi xd(spec.dim_disc);
  for (int i = 0; i < spec.n; ++i) {
    draw_covariates(spec.propensity, rng, xc);
    for (int c = 0; c < spec.dim_disc; ++c) xd[c] = rng.uniform_int(2);

    const double v = rng.uniform_open();
    if (v_out) (*v_out)[i] = v;
    const double z = normal_quantile(v);
    const double pi = spec.propensity_at(xc, xd);
    const int d = pi >= v ? 1 : 0;

    const double e0 = spec.noise_scale * rng.normal();
    const double e1 = spec.noise_scale * rng.normal();
    Eigen::VectorXd x(k);
    x.head(spec.dim_cont) = xc;
    for (int c = 0; c < spec.dim_disc; ++c) x[spec.dim_cont + c] = xd[c];

    const double y0 = x.dot(beta0) + spec.alpha0 + spec.rho0 * z + e0;
    const double y1 = x.dot(beta1) + spec.alpha1 + spec.rho1 * z + e1;

    s.x_cont.row(i) = xc.transpose();
    if (spec.dim_disc > 0) s.x_disc.row(i) = xd.transpose();
    s.d[i] = d;
    s.y[i] = d == 1 ? y1 : y0;
  }
  s.validate();

  OracleMte oracle;
  oracle.alpha0 = spec.alpha0;
  oracle.alpha1 = spec.alpha1;
  oracle.beta0 = beta0;
  oracle.beta1 = beta1;
  oracle.rho0 = spec.rho0;
  oracle.rho1 = spec.rho1;
  return {std::move(s), std::move(oracle)};
}

}  // namespace mtefree
