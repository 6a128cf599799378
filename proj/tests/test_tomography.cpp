#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <vector>

#include "pairsim/errors.hpp"
#include "pairsim/polarization.hpp"
#include "pairsim/qstate.hpp"
#include "pairsim/random.hpp"
#include "pairsim/source.hpp"
#include "pairsim/tomography.hpp"

using namespace pairsim;

namespace {

Mat4 kron2(const Mat2& a, const Mat2& b) {
  Mat4 out;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    }
  }
  return out;
}

std::vector<CountRecord> exact_tomo_records(const DensityMatrix& rho,
                                            double scale) {
  std::vector<CountRecord> recs;
  for (const auto& [sa, sb] : tomography_settings()) {
    CountRecord r;
    r.setting_a = sa;
    r.setting_b = sb;
    r.duration_s = 1.0;
    r.coincidences = scale * joint_probability(rho, sa, sb);
    recs.push_back(r);
  }
  return recs;
}

std::vector<CountRecord> noisy_tomo_records(const DensityMatrix& rho,
                                            double scale,
                                            std::uint64_t seed) {
  std::vector<CountRecord> recs = exact_tomo_records(rho, scale);
  for (size_t k = 0; k < recs.size(); ++k) {
    Rng rng(derive_seed(seed, k));
    recs[k].coincidences =
        static_cast<double>(rng.poisson(recs[k].coincidences));
  }
  return recs;
}

double frobenius_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return (a.matrix() - b.matrix()).norm();
}

}  // namespace

TEST_CASE("reconstruction settings enumerate H,V,D,R pairs arm-A major") {
  const auto settings = tomography_settings();
  // Row 0: arm A fixed at H.
  CHECK(*settings[0].first.qwp_deg == doctest::Approx(0.0));
  CHECK(settings[0].first.hwp_deg == doctest::Approx(0.0));
  CHECK(settings[1].first.hwp_deg == doctest::Approx(0.0));
  CHECK(settings[1].second.hwp_deg == doctest::Approx(45.0));   // V
  CHECK(*settings[2].second.qwp_deg == doctest::Approx(45.0));  // D
  CHECK(settings[2].second.hwp_deg == doctest::Approx(22.5));
  CHECK(*settings[3].second.qwp_deg == doctest::Approx(135.0));  // R
  CHECK(settings[3].second.hwp_deg == doctest::Approx(0.0));
  // Arm A advances every four settings.
  CHECK(settings[4].first.hwp_deg == doctest::Approx(45.0));  // V
  CHECK(*settings[8].first.qwp_deg == doctest::Approx(45.0));  // D
  CHECK(*settings[12].first.qwp_deg == doctest::Approx(135.0));  // R
  // Every setting uses both plates.
  for (const auto& [sa, sb] : settings) {
    CHECK(sa.has_qwp());
    CHECK(sb.has_qwp());
  }
}

TEST_CASE("likelihood gradient matches central finite differences") {
  // The analytic gradient is the piece most likely to be wrong; check every
  // component against finite differences on a generic interior point.
  const DensityMatrix rho = output_state(SourceConfig{});
  const auto settings = tomography_settings();
  std::vector<Mat4> projectors;
  std::vector<double> counts;
  for (const auto& [sa, sb] : settings) {
    projectors.push_back(
        kron2(analyzer_projector(sa).m, analyzer_projector(sb).m));
    counts.push_back(1.0e5 * joint_probability(rho, sa, sb));
  }

  Rng rng(1234);
  for (int trial = 0; trial < 3; ++trial) {
    detail::TomoParams t;
    for (int i = 0; i < 16; ++i) t(i) = 0.5 * rng.normal();
    t(0) = 1.0 + 0.2 * rng.normal();  // keep the trace well away from zero

    detail::TomoParams grad;
    const double f0 = detail::tomo_deviance(t, projectors, counts, &grad);
    CHECK(std::isfinite(f0));
    const double h = 1e-6;
    for (int i = 0; i < 16; ++i) {
      detail::TomoParams tp = t, tm = t;
      tp(i) += h;
      tm(i) -= h;
      const double fp = detail::tomo_deviance(tp, projectors, counts, nullptr);
      const double fm = detail::tomo_deviance(tm, projectors, counts, nullptr);
      const double fd = (fp - fm) / (2.0 * h);
      CHECK(grad(i) ==
            doctest::Approx(fd).epsilon(1e-5).scale(std::abs(f0) + 1.0));
    }
  }
}

TEST_CASE("exact bell-state counts reconstruct the bell state") {
  const DensityMatrix truth = DensityMatrix::pure(KetState::phi_plus());
  const auto recs = exact_tomo_records(truth, 1.0e7);
  const TomographyResult res = mle_tomography(recs);
  CHECK(res.converged);
  CHECK(is_physical(res.rho).ok());
  CHECK(fidelity(res.rho, KetState::phi_plus()) >= 0.9999);
  CHECK(res.best_restart >= 0);
  CHECK(res.best_restart < 3);
}

TEST_CASE("white-noise counts reconstruct the maximally mixed state") {
  const auto recs =
      exact_tomo_records(DensityMatrix::maximally_mixed(), 1.0e7);
  const TomographyResult res = mle_tomography(recs);
  CHECK(res.converged);
  CHECK(is_physical(res.rho).ok());
  CHECK(purity(res.rho) == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("objective trace of the winning restart never increases") {
  const DensityMatrix rho = output_state(SourceConfig{});
  const auto recs = noisy_tomo_records(rho, 1.0e4, 808);
  const TomographyResult res = mle_tomography(recs);
  REQUIRE(res.objective_trace.size() >= 2);
  for (size_t i = 1; i < res.objective_trace.size(); ++i) {
    CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-12);
  }
  CHECK(res.deviance == doctest::Approx(res.objective_trace.back()));
}

TEST_CASE("reconstruction error shrinks as counts grow") {
  const DensityMatrix truth = output_state(SourceConfig{});
  std::array<double, 4> dist{};
  const std::array<double, 4> scales = {1.0e3, 1.0e4, 1.0e5, 1.0e6};
  for (size_t i = 0; i < scales.size(); ++i) {
    const auto recs = noisy_tomo_records(truth, scales[i], 99 + i);
    const TomographyResult res = mle_tomography(recs);
    CHECK(res.converged);
    CHECK(is_physical(res.rho).ok());
    dist[i] = frobenius_distance(res.rho, truth);
  }
  // Two-decade gaps leave no room for statistical inversions.
  CHECK(dist[0] > dist[2]);
  CHECK(dist[1] > dist[3]);
  CHECK(dist[3] < 0.01);
}

TEST_CASE("linear inversion seeds close to the truth on exact counts") {
  const DensityMatrix truth = DensityMatrix::pure(KetState::phi_plus());
  const DensityMatrix seed = linear_inversion(exact_tomo_records(truth, 1.0e6));
  CHECK(is_physical(seed).ok());
  CHECK(fidelity(seed, KetState::phi_plus()) > 0.99);
}

TEST_CASE("record validation rejects malformed tomography inputs") {
  const DensityMatrix truth = DensityMatrix::pure(KetState::phi_plus());
  const auto good = exact_tomo_records(truth, 1.0e4);

  std::vector<CountRecord> fifteen(good.begin(), good.end() - 1);
  CHECK_THROWS_AS(mle_tomography(fifteen), InvalidArgument);

  auto dup = good;
  dup[5] = dup[4];  // one setting twice, another missing
  CHECK_THROWS_AS(mle_tomography(dup), InvalidArgument);

  auto wrong_angle = good;
  wrong_angle[7].setting_b = AnalyzerSetting(10.0, 10.0);
  CHECK_THROWS_AS(mle_tomography(wrong_angle), InvalidArgument);

  auto uneven = good;
  uneven[3].duration_s = 2.0;
  CHECK_THROWS_AS(mle_tomography(uneven), InvalidArgument);

  auto negative = good;
  negative[2].coincidences = -1.0;
  CHECK_THROWS_AS(mle_tomography(negative), InvalidArgument);

  TomographyOptions opts;
  opts.restarts = 0;
  CHECK_THROWS_AS(mle_tomography(good, opts), InvalidArgument);

  // Any record order is accepted.
  auto shuffled = good;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK_NOTHROW(mle_tomography(shuffled));
}

TEST_CASE("reconstruction is deterministic") {
  const DensityMatrix truth = output_state(SourceConfig{});
  const auto recs = noisy_tomo_records(truth, 1.0e4, 4321);
  const TomographyResult r1 = mle_tomography(recs);
  const TomographyResult r2 = mle_tomography(recs);
  CHECK(r1.iterations == r2.iterations);
  CHECK(r1.best_restart == r2.best_restart);
  CHECK(r1.deviance == r2.deviance);
  CHECK((r1.rho.matrix() - r2.rho.matrix()).cwiseAbs().maxCoeff() == 0.0);
}
