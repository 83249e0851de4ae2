#include <catch_amalgamated.hpp>

#include <beatlock/lock_chain.hpp>

#include <cmath>
#include <random>

using namespace beatlock;
using Catch::Approx;

namespace {

lock::LockConfig yb_lock() {
  lock::LockConfig c;
  c.n = 157;
  c.nu_lo = 12.438e9;
  return c;
}

noise::RepRateTrajectory constant(double nu = 80.6e6, std::size_t len = 5) {
  return noise::generate_trajectory(nu, {}, {}, 1.0 * (len - 1), 1.0, 1);
}

}  // namespace

TEST_CASE("error signal of the stated chain sits at 216.2 MHz", "[lock]") {
  const auto d = lock::error_signal(constant(), yb_lock());
  for (double f : d.freq) CHECK(f == Approx(216.2e6).epsilon(1e-12));
}

TEST_CASE("AOM2 at 204.819 MHz puts the beat on the qubit", "[lock]") {
  const auto traj = constant();
  const auto d = lock::error_signal(traj, yb_lock());
  const auto b = lock::effective_beat(traj, d, 12.642819e9 - 12.438e9, 157);
  CHECK(12.642819e9 - 12.438e9 == Approx(204.819e6).epsilon(1e-12));
  for (double f : b.freq) CHECK(f == Approx(12.642819e9).epsilon(1e-15));
}

TEST_CASE("error signal slope is n times the trajectory slope", "[lock]") {
  noise::DriftProfile dp;
  dp.slope = 0.25;
  const auto traj = noise::generate_trajectory(80.6e6, dp, {}, 100.0, 10.0, 1);
  const auto d = lock::error_signal(traj, yb_lock());
  for (std::size_t k = 1; k < d.freq.size(); ++k)
    CHECK((d.freq[k] - d.freq[0]) / traj.t[k] == Approx(157 * 0.25).epsilon(1e-6));
}

TEST_CASE("noise shape contract per lock mode", "[lock]") {
  const auto traj = constant();
  auto cfg = yb_lock();
  cfg.error_noise = noise::NoiseSpec::flat(-90);
  cfg.mode = lock::DirectMode{};
  const auto direct = lock::error_signal(traj, cfg);
  CHECK(direct.noise == cfg.error_noise);
  cfg.mode = lock::PllMode{1e3, -120};
  const auto pll = lock::error_signal(traj, cfg);
  CHECK(pll.freq == direct.freq);
  CHECK(pll.noise.shape == noise::NoiseShape::pll_shaped);
  CHECK(spectral::to_db(pll.noise.density(10e3)) == Approx(-120.0));
  CHECK(spectral::to_db(pll.noise.density(10.0)) == Approx(-90.0));
}

TEST_CASE("locked beat is time independent, unlocked beat follows the tooth", "[lock][property]") {
  Rng rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 25; ++i) {
    noise::DriftProfile dp;
    dp.slope = 0.05 * u(rng);
    dp.temp_amplitude = 3.0 * std::abs(u(rng));
    dp.temp_period = 50.0;
    dp.random_walk_density = 0.5 * std::abs(u(rng));
    const noise::JitterProfile jp{0.2 * std::abs(u(rng)), 5.0};
    const auto traj = noise::generate_trajectory(80.6e6, dp, jp, 60.0, 0.1, 100 + i);
    const auto cfg = yb_lock();
    const double nu_m2 = 204.819e6;
    const auto locked = lock::effective_beat(traj, lock::error_signal(traj, cfg), nu_m2, cfg.n);
    const auto unlocked = lock::effective_beat(traj, lock::freeze(lock::error_signal(traj, cfg)), nu_m2, cfg.n);
    for (std::size_t k = 0; k < traj.t.size(); ++k) {
      CHECK(std::abs(locked.freq[k] - (cfg.nu_lo + nu_m2)) <= 1e-5);
      const double expected = cfg.n * (traj.nu_rep[k] - traj.nu_rep[0]);
      CHECK(std::abs((unlocked.freq[k] - unlocked.freq[0]) - expected) <= 1e-5);
    }
  }
}

TEST_CASE("changing the LO with AOM2 co-adjusted leaves the beat unchanged", "[lock][property]") {
  noise::DriftProfile dp;
  dp.slope = 0.3;
  const auto traj = noise::generate_trajectory(80.6e6, dp, {}, 10.0, 1.0, 1);
  auto a = yb_lock();
  auto b = yb_lock();
  b.nu_lo = a.nu_lo + 20e6;
  const double target = 12.642819e9;
  const auto ba = lock::effective_beat(traj, lock::error_signal(traj, a), target - a.nu_lo, 157);
  const auto bb = lock::effective_beat(traj, lock::error_signal(traj, b), target - b.nu_lo, 157);
  for (std::size_t k = 0; k < ba.freq.size(); ++k) CHECK(ba.freq[k] == Approx(bb.freq[k]).epsilon(1e-15));
}

TEST_CASE("residual cancels only at the locked tooth", "[lock]") {
  noise::DriftProfile dp;
  dp.slope = 0.5;
  const auto traj = noise::generate_trajectory(80.6e6, dp, {}, 20.0, 1.0, 1);
  const auto cfg = yb_lock();
  const auto drive = lock::error_signal(traj, cfg);
  for (double r : lock::residual_at_tooth(traj, drive, 204.819e6, 157, 157)) CHECK(r == 0.0);
  const auto next = lock::residual_at_tooth(traj, drive, 204.819e6, 158, 157);
  for (std::size_t k = 0; k < next.size(); ++k) CHECK(next[k] == Approx(0.5 * traj.t[k]).margin(1e-5));
  const auto far = lock::residual_at_tooth(traj, drive, 204.819e6, 150, 157);
  for (std::size_t k = 0; k < far.size(); ++k)
    CHECK(far[k] == Approx(-7.0 * (traj.nu_rep[k] - traj.nu_rep[0])).margin(1e-5));
  const auto flat = constant();
  const auto fd = lock::error_signal(flat, cfg);
  for (int m : {1, 100, 156, 157, 158})
    for (double r : lock::residual_at_tooth(flat, fd, 204.819e6, m, 157)) CHECK(r == 0.0);
}

TEST_CASE("beat leaving the low-pass band is a lock loss", "[lock][errors]") {
  noise::DriftProfile dp;
  dp.slope = 1e6;  // walks the beat out of the 300 MHz filter
  const auto traj = noise::generate_trajectory(80.6e6, dp, {}, 100.0, 1.0, 1);
  try {
    lock::error_signal(traj, yb_lock());
    FAIL("expected LockLossError");
  } catch (const LockLossError& e) {
    CHECK(e.sample() > 0);
    CHECK(e.time() == traj.t[e.sample()]);
  }
}

TEST_CASE("lock configuration invariants", "[lock][errors]") {
  auto c = yb_lock();
  CHECK(lock::validate(c, 80.6e6).empty());
  c.nu_lo = 157 * 80.6e6 + 1.0;
  CHECK_FALSE(lock::validate(c, 80.6e6).empty());
  c = yb_lock();
  c.n = 0;
  CHECK_FALSE(lock::validate(c, 80.6e6).empty());
  c = yb_lock();
  c.bpf_width = 3 * 80.6e6;  // lets neighbouring teeth through
  CHECK_FALSE(lock::validate(c, 80.6e6).empty());
  c = yb_lock();
  c.lpf_cutoff = 100e6;  // blocks the 216 MHz beat
  CHECK_FALSE(lock::validate(c, 80.6e6).empty());
  c = yb_lock();
  c.lpf_cutoff = 30e9;  // passes the sum frequency
  CHECK_FALSE(lock::validate(c, 80.6e6).empty());
  c = yb_lock();
  c.mode = lock::PllMode{0.0, -120};
  CHECK_FALSE(lock::validate(c, 80.6e6).empty());
  CHECK_THROWS_AS(lock::error_signal(constant(), c), ValidationError);
}

TEST_CASE("mismatched time axes are an alignment error", "[lock][errors]") {
  const auto a = constant(80.6e6, 5);
  const auto b = constant(80.6e6, 6);
  const auto d = lock::error_signal(b, yb_lock());
  CHECK_THROWS_AS(lock::effective_beat(a, d, 204.819e6, 157), AlignmentError);
}
