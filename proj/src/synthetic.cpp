#include <cmath>
#include <numbers>

#include "fmalign/dataset.hpp"
#include "fmalign/rng.hpp"

namespace fmalign {

namespace {

constexpr double kPi = std::numbers::pi;

struct SurfacePoint {
  double x, y, z;
};

SurfacePoint swiss_roll_at(double t, double h) { return {t * std::cos(t), h, t * std::sin(t)}; }

SurfacePoint s_curve_at(double t, double h) {
  const double sign = t < 0.0 ? -1.0 : 1.0;
  return {std::sin(t), h, sign * (std::cos(t) - 1.0)};
}

struct Parametrization {
  double t_lo, t_hi, h_hi;
  SurfacePoint (*at)(double, double);
};

Parametrization parametrization(Manifold kind) {
  if (kind == Manifold::swiss_roll) return {1.5 * kPi, 4.5 * kPi, 21.0, &swiss_roll_at};
  return {-1.5 * kPi, 1.5 * kPi, 2.0, &s_curve_at};
}

}  // namespace

ManifoldSample make_manifold(Manifold kind, Index count, double noise, std::uint64_t seed) {
  if (count < 1) throw ConfigError("sample count must be >= 1");
  if (!(noise >= 0.0)) throw ConfigError("noise must be >= 0");
  const Parametrization p = parametrization(kind);
  CounterStream param_rng(seed, mix_stream(static_cast<std::uint64_t>(kind), 0));
  CounterStream noise_rng(seed, mix_stream(static_cast<std::uint64_t>(kind), 1));

  ManifoldSample out;
  out.points.domain_id = kind == Manifold::swiss_roll ? "swiss_roll" : "s_curve";
  out.points.values.resize(count, 3);
  out.intrinsic.resize(count);
  for (Index i = 0; i < count; ++i) {
    const double t = p.t_lo + (p.t_hi - p.t_lo) * param_rng.uniform01();
    const double h = p.h_hi * param_rng.uniform01();
    const SurfacePoint s = p.at(t, h);
    out.points.values(i, 0) = s.x;
    out.points.values(i, 1) = s.y;
    out.points.values(i, 2) = s.z;
    if (noise > 0.0)
      for (Index c = 0; c < 3; ++c) out.points.values(i, c) += noise * noise_rng.normal();
    out.intrinsic(i) = t;
  }
  return out;
}

ManifoldSample make_swiss_roll(Index count, double noise, std::uint64_t seed) {
  return make_manifold(Manifold::swiss_roll, count, noise, seed);
}

ManifoldSample make_s_curve(Index count, double noise, std::uint64_t seed) {
  return make_manifold(Manifold::s_curve, count, noise, seed);
}

double surface_scale(Manifold kind) {
  // Midpoint rule over the parameter rectangle.
  const Parametrization p = parametrization(kind);
  constexpr int nt = 400, nh = 40;
  Eigen::Matrix<double, Eigen::Dynamic, 3> pts(nt * nh, 3);
  for (int a = 0; a < nt; ++a)
    for (int b = 0; b < nh; ++b) {
      const double t = p.t_lo + (p.t_hi - p.t_lo) * (a + 0.5) / nt;
      const double h = p.h_hi * (b + 0.5) / nh;
      const SurfacePoint s = p.at(t, h);
      pts.row(a * nh + b) << s.x, s.y, s.z;
    }
  const Eigen::RowVector3d centroid = pts.colwise().mean();
  return std::sqrt((pts.rowwise() - centroid).rowwise().squaredNorm().mean());
}

TwoDomainTask make_two_domain_task(const TwoDomainTaskSpec& spec) {
  if (spec.classes < 2 || spec.latent_dim < 1 || spec.source_features < 1 || spec.target_features < 1)
    throw ConfigError("two-domain task needs >= 2 classes and positive dimensions");
  CounterStream rng(spec.seed, 0x7461736bull);
  auto gaussian = [&rng](Index r, Index c, double scale) {
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = scale * rng.normal();
    return m;
  };
  const Matrix centers = gaussian(spec.classes, spec.latent_dim, spec.separation);
  // Each domain sees the latent space through its own random linear sensor.
  const Matrix mix_src = gaussian(spec.latent_dim, spec.source_features, 1.0);
  const Matrix mix_tgt = gaussian(spec.latent_dim, spec.target_features, 1.0);
  const Vector offset_tgt = gaussian(spec.target_features, 1, 2.0);

  auto make_domain = [&](Index count, const Matrix& mix, const Vector* offset, const char* id) {
    DataMatrix d;
    d.domain_id = id;
    d.labels.emplace(static_cast<std::size_t>(count));
    Matrix latent(count, spec.latent_dim);
    for (Index i = 0; i < count; ++i) {
      const auto label = static_cast<Label>(i % spec.classes);
      (*d.labels)[static_cast<std::size_t>(i)] = label;
      for (Index c = 0; c < spec.latent_dim; ++c) latent(i, c) = centers(label, c) + rng.normal();
    }
    d.values = latent * mix + gaussian(count, mix.cols(), spec.feature_noise);
    if (offset) d.values.rowwise() += offset->transpose();
    return d;
  };
  TwoDomainTask task;
  task.source = make_domain(spec.source_samples, mix_src, nullptr, "synthetic_source");
  task.target = make_domain(spec.target_samples, mix_tgt, &offset_tgt, "synthetic_target");
  return task;
}

}  // namespace fmalign
