// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Usage:
//   crowdgate_acceptance --cli PATH --data DIR [--scratch DIR] [--only N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <CLI11.hpp>

#include "crowdgate/density.hpp"
#include "crowdgate/eval.hpp"
#include "crowdgate/formats.hpp"
#include "crowdgate/pipeline.hpp"
#include "crowdgate/segmenting.hpp"
#include "crowdgate/smoothing.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace crowdgate;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Env {
  std::string cli;
  fs::path data;
  fs::path scratch;
};

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

CountSeries series(std::vector<Count> c, std::int64_t fps = 30) {
  return CountSeries::from_counts(std::move(c), Rational(fps, 1));
}

SmoothingParams params(std::size_t half) { return {half, 3, TieBreak::PreferLastValue}; }

Outcome window_lengths(const Env&) {
  const auto t0 = Clock::now();
  const std::size_t a = window_length(Rational(30, 1), 3);
  const std::size_t b = window_length(Rational(24, 1), 3);
  const std::size_t c = window_length(Rational(25, 1), 3);
  const std::size_t d = window_length(Rational(2, 1), 3);
  const double elapsed = ms_since(t0);
  const bool ok = a == 10 && b == 8 && c == 8 && d == 1 && elapsed < 1.0;
  return {ok, fmt("(30,24,25,2)/3 -> (%zu,%zu,%zu,%zu), %.4f ms", a, b, c, d, elapsed)};
}

Outcome constant_fixed_point(const Env&) {
  std::mt19937_64 rng(1);
  std::size_t changed = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng() % 500;
    const auto v = static_cast<Count>(rng() % 101);
    const std::size_t half = 1 + rng() % 20;
    const CountSeries in = series(std::vector<Count>(n, v));
    changed += smooth_series(in, params(half)) != in;
  }
  return {changed == 0, fmt("%zu/1000 series altered", changed)};
}

Outcome spike_suppression(const Env&) {
  std::mt19937_64 rng(3);
  std::size_t bad = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t half = 1 + rng() % 20;
    const auto v = static_cast<Count>(rng() % 60);
    Count w = static_cast<Count>(rng() % 60);
    if (w == v) ++w;
    const std::size_t spike = 1 + rng() % half;
    const std::size_t before = half + rng() % 30;
    const std::size_t after = half + rng() % 30;
    std::vector<Count> c(before, v);
    c.insert(c.end(), spike, w);
    c.insert(c.end(), after, v);
    const auto out = smooth_series(series(c), params(half));
    bad += !std::all_of(out.counts.begin(), out.counts.end(), [v](Count x) { return x == v; });
  }
  return {bad == 0, fmt("%zu/500 outputs not all-v", bad)};
}

Outcome step_preservation(const Env&) {
  std::mt19937_64 rng(4);
  std::size_t bad = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t half = 1 + rng() % 20;
    const auto v = static_cast<Count>(rng() % 60);
    Count w = static_cast<Count>(rng() % 60);
    if (w == v) ++w;
    std::vector<Count> c(half + rng() % 30, v);
    c.insert(c.end(), half + 1 + rng() % 30, w);
    const CountSeries in = series(c);
    bad += smooth_series(in, params(half)).counts != in.counts;
  }
  return {bad == 0, fmt("%zu/500 steps altered", bad)};
}

Outcome apd_identity(const Env&) {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  bool self_exact = true;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng() % 300;
    const Count top = 1 + static_cast<Count>(rng() % 40);
    std::vector<Count> det(n), truth(n);
    long double sd = 0, st = 0;
    for (std::size_t i = 0; i < n; ++i) {
      det[i] = static_cast<Count>(rng() % static_cast<std::uint64_t>(top + 1));
      truth[i] = 1 + static_cast<Count>(rng() % static_cast<std::uint64_t>(top));
      sd += det[i];
      st += truth[i];
    }
    const auto b = ap_d_breakdown(det, truth);
    const double ratio = static_cast<double>(sd / st);
    worst = std::max(worst, std::abs(b.per_value - ratio) / ratio);
    self_exact = self_exact && ap_d(series(truth), series(truth)) == 1.0;
  }
  return {worst <= 1e-12 && self_exact, fmt("max relative gap %.3g, ap_d(x,x)==1: %s", worst, self_exact ? "yes" : "no")};
}

int run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = "'" + cli + "' " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Outcome golden_cli(const Env& env) {
  const fs::path a = env.scratch / "golden_a";
  const fs::path b = env.scratch / "golden_b";
  const auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  const std::string args = "run --detections " + q(env.data / "toy7.jsonl") + " --config " +
                           q(env.data / "toy7_config.json") + " --truth " + q(env.data / "toy7_truth.csv") + " --out ";
  for (const auto& dir : {a, b}) {
    fs::remove_all(dir);
    if (const int rc = run_cli(env.cli, args + q(dir)); rc != 0) return {false, fmt("run exited %d", rc)};
  }
  const CountSeries smoothed = read_count_csv(read_file(a / kSmoothedCountsFile), Rational(9, 1));
  const bool sevens = smoothed.counts == std::vector<Count>(7, 7);

  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    differing += read_file(entry.path()) != read_file(b / entry.path().filename());
  }
  std::size_t golden_mismatch = 0;
  for (const char* name : {kRawCountsFile, kSmoothedCountsFile, kSegmentsFile, kCutlistFile, kEvalTextFile})
    golden_mismatch += read_file(a / name) != read_file(env.data / "golden_toy7" / name);
  return {sevens && differing == 0 && golden_mismatch == 0,
          fmt("smoothed all 7: %s, %zu/%zu artifacts differ across runs, %zu differ from golden", sevens ? "yes" : "no",
              differing, files, golden_mismatch)};
}

Outcome segment_oracle(const Env&) {
  std::mt19937_64 rng(7);
  std::size_t bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng() % 200;
    const Count threshold = 1 + static_cast<Count>(rng() % 9);
    std::vector<Count> c(n);
    for (auto& x : c) x = static_cast<Count>(rng() % 20);
    const auto got = extract_segments(series(c), SegmentPolicy{threshold, 1, 0});
    const auto want = oracle::naive_runs(c, threshold);
    bool same = got.size() == want.size();
    for (std::size_t k = 0; same && k < got.size(); ++k)
      same = got[k].start_frame == want[k].first && got[k].end_frame == want[k].last &&
             got[k].peak_count == want[k].peak && got[k].mean_count == want[k].mean;
    bad += !same;
  }
  return {bad == 0, fmt("%zu/1000 series disagree", bad)};
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

Outcome least_squares(const Env&) {
  std::mt19937_64 rng(8);
  // count = 0.05 area + 0.3 edge + 2 holds exactly on these integer grids.
  std::vector<CalibrationSample> clean;
  for (std::uint64_t i = 0; i < 60; ++i) {
    const std::uint64_t area = 20 * (1 + rng() % 400);
    const std::uint64_t edge = 10 * (1 + rng() % 50);
    clean.push_back({{area, edge, i}, static_cast<Count>(area / 20 + 3 * (edge / 10) + 2)});
  }
  const auto r = fit_regressor(clean);
  const double clean_err = std::max({rel(r.coef_area, 0.05), rel(r.coef_edge, 0.3), rel(r.intercept, 2.0)});

  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<CalibrationSample> noisy;
  std::vector<double> x1, x2, y;
  for (std::uint64_t i = 0; i < 500; ++i) {
    const std::uint64_t area = 200 + rng() % 6000;
    const std::uint64_t edge = 10 + rng() % 300;
    const double mean = 0.01 * static_cast<double>(area) + 0.5 * static_cast<double>(edge) + 2.0;
    const auto count = static_cast<Count>(std::max(0.0, std::round(mean + noise(rng))));
    noisy.push_back({{area, edge, i}, count});
    x1.push_back(static_cast<double>(area));
    x2.push_back(static_cast<double>(edge));
    y.push_back(static_cast<double>(count));
  }
  const auto n = fit_regressor(noisy);
  const auto o = oracle::normal_equations_fit(x1, x2, y);
  const double noisy_err = std::max({rel(n.coef_area, o[0]), rel(n.coef_edge, o[1]), rel(n.intercept, o[2])});
  return {clean_err <= 1e-9 && noisy_err <= 1e-9,
          fmt("noiseless max rel err %.3g, noisy vs normal equations %.3g", clean_err, noisy_err)};
}

Outcome background_convergence(const Env&) {
  const std::size_t bound =
      static_cast<std::size_t>(std::ceil(std::log(1.0 / 255.0) / std::log(0.95)));
  std::size_t worst = 0;
  bool tight = true;
  for (int v = 1; v <= 255; ++v) {
    const std::vector<std::uint8_t> pixels(16, static_cast<std::uint8_t>(v));
    BackgroundModel m = BackgroundModel::from_frame(GrayFrame{4, 4, std::vector<std::uint8_t>(16, 0), 0});
    std::size_t updates = 0;
    while (std::abs(m.background[0] - v) > 1.0 && updates <= bound + 5) {
      m = update_background(std::move(m), GrayFrame{4, 4, pixels, updates}, GrayFrame{4, 4, pixels, updates + 1});
      ++updates;
    }
    worst = std::max(worst, updates);
    if (v == 255) tight = updates == bound;
  }
  return {worst <= bound && tight, fmt("bound %zu updates, slowest scene value needed %zu", bound, worst)};
}

Outcome smoothing_benefit(const Env&) {
  const auto t0 = Clock::now();
  int at_least_raw = 0;
  double raw_dev = 0, smooth_dev = 0, raw_frame = 0, smooth_frame = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(trial);
    std::vector<ProfileRun> profile;
    for (int k = 0; k < 4; ++k) profile.push_back({150 + rng() % 301, static_cast<Count>(1 + rng() % 25)});
    const auto trace = generate_synthetic(profile, JitterSpec{0.1, 3, 2, trial}, Rational(30, 1));
    const auto smoothed = smooth_series(trace.jittered, SmoothingParams::for_fps(Rational(30, 1)));
    const auto r = ap_d_breakdown(trace.jittered.counts, trace.truth.counts);
    const auto s = ap_d_breakdown(smoothed.counts, trace.truth.counts);
    at_least_raw += s.per_value >= r.per_value;
    raw_dev += std::abs(r.per_value - 1.0) / 100.0;
    smooth_dev += std::abs(s.per_value - 1.0) / 100.0;
    raw_frame += r.matched_frame / 100.0;
    smooth_frame += s.matched_frame / 100.0;
  }
  return {at_least_raw >= 95 && smooth_dev < raw_dev,
          fmt("smoothed>=raw in %d/100, mean|AP_d-1| raw %.5f smoothed %.5f; "
              "info: matched-frame precision raw %.4f smoothed %.4f; %.0f ms",
              at_least_raw, raw_dev, smooth_dev, raw_frame, smooth_frame, ms_since(t0))};
}

Outcome throughput(const Env&) {
  std::vector<ProfileRun> profile;
  std::mt19937_64 rng(11);
  std::size_t n = 0;
  while (n < 1'000'000) {
    const std::size_t len = std::min<std::size_t>(30 + rng() % 900, 1'000'000 - n);
    profile.push_back({len, static_cast<Count>(rng() % 40)});
    n += len;
  }
  const auto trace = generate_synthetic(profile, JitterSpec{0.1, 3, 2, 11}, Rational(30, 1));
  const auto t0 = Clock::now();
  const auto out = smooth_series(trace.jittered, SmoothingParams::for_fps(Rational(30, 1)));
  const double elapsed = ms_since(t0);
  return {out.size() == 1'000'000 && elapsed < 1000.0, fmt("1,000,000 frames in %.1f ms", elapsed)};
}

}  // namespace

int main(int argc, char** argv) {
  Env env;
  int only = 0;
  CLI::App app{"crowdgate acceptance criteria"};
  app.add_option("--cli", env.cli, "crowdgate executable")->required();
  app.add_option("--data", env.data, "test data directory")->required();
  app.add_option("--scratch", env.scratch, "working directory for CLI runs");
  app.add_option("--only", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);
  if (env.scratch.empty()) env.scratch = fs::temp_directory_path() / "crowdgate_acceptance";
  fs::create_directories(env.scratch);

  const std::vector<std::pair<const char*, std::function<Outcome(const Env&)>>> criteria = {
      {"window length", window_lengths},
      {"constant series fixed point", constant_fixed_point},
      {"spike suppression", spike_suppression},
      {"step preservation", step_preservation},
      {"AP_d identity", apd_identity},
      {"CLI golden run", golden_cli},
      {"segment oracle", segment_oracle},
      {"least-squares recovery", least_squares},
      {"background convergence", background_convergence},
      {"smoothing benefit on synthetic traces", smoothing_benefit},
      {"smoothing throughput", throughput},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second(env);
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2zu %-38s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
  }
  return failures == 0 ? 0 : 1;
}
