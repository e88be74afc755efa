// Acceptance gate: eight pinned criteria, one PASS/FAIL line each. The exit
// code is the number of failed criteria, so a clean run exits 0.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lvd/lvd.hpp"

using namespace lvd;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string data_path(const std::string& rel) { return data_dir() + "/" + rel; }

DynamicSceneLayout load_dsl(const std::string& rel) {
  return parse_dsl(slurp(data_path(rel))).dsl;
}

Mat random_positive(Rng& rng, int n) {
  Mat a(n, n);
  for (double& x : a.v) x = 0.05 + rng.uniform();
  return a;
}

Mat random_mask(Rng& rng, int n) {
  Mat m(n, n);
  for (double& x : m.v) x = rng.uniform() < 0.4 ? 1.0 : 0.0;
  m.v[0] = 1.0;
  m.v[m.size() - 1] = 0.0;
  return m;
}

// Gap between the k-th and (k+1)-th values of one mask region; finite
// differences cross the selection boundary when this shrinks below 2h.
double boundary_gap(const Mat& A, const Mat& M, double keep) {
  std::vector<double> v;
  for (int i = 0; i < A.size(); ++i)
    if (M.v[i] == keep) v.push_back(A.v[i]);
  int k = energy::topk_count(0.75, static_cast<int>(v.size()));
  std::sort(v.begin(), v.end(), std::greater<>());
  return k < static_cast<int>(v.size()) ? v[k - 1] - v[k] : 1.0;
}

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& why) {
    if (cond || !ok) return;  // keep the first failure's detail
    ok = false;
    detail = why;
  }
};

// 1. The three in-context layouts parse, carry no out-of-bounds boxes, and
//    serialize back byte-for-byte; the assembled default prompt matches the
//    golden file.
Check fixture_fidelity() {
  Check c;
  const char* files[] = {"examples/01_woman_man.txt", "examples/02_red_ball.txt",
                         "examples/03_painting.txt"};
  for (const char* f : files) {
    auto ex = prompting::load_example(data_path(f));
    auto parsed = parse_dsl(ex.assistant_text());
    int oob = 0;
    for (const auto& v : validate_dsl(parsed.dsl))
      oob += v.kind == Violation::OutOfBounds;
    c.require(oob == 0, std::string(f) + ": " + std::to_string(oob) + " out-of-bounds boxes");
    c.require(serialize_dsl(parsed.dsl) == ex.dsl_text,
              std::string(f) + ": serialization is not byte-stable");
  }
  auto bundle = prompting::make_bundle(
      prompting::PromptTemplate::load(data_path("prompt_template.txt")),
      prompting::load_examples(data_dir(), 3), "{User Text Prompt for DSL Generation}");
  c.require(prompting::build_merged_prompt(bundle) ==
                slurp(data_path("golden/merged_prompt_default.txt")),
            "merged default prompt differs from the golden file");
  return c;
}

// 2. Analytic gradients match central finite differences (h = 1e-5) with max
//    relative error < 1e-4: 20 instances per energy per seed, 5 seeds. Top-k
//    maps are tie-free at the selection boundary; CoM instances are pairs of
//    random positive maps.
Check gradient_correctness() {
  Check c;
  double worst = 0.0;
  for (int s = 0; s < 5; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    for (int i = 0; i < 20; ++i) {
      Mat M = random_mask(rng, 16);
      Mat A = random_positive(rng, 16);
      while (boundary_gap(A, M, 1.0) < 1e-4 || boundary_gap(A, M, 0.0) < 1e-4)
        A = random_positive(rng, 16);
      worst = std::max(worst, energy::fd_check_topk(A, M));
      worst = std::max(worst, energy::fd_check_com(random_positive(rng, 16),
                                                   random_positive(rng, 16),
                                                   random_positive(rng, 16),
                                                   random_positive(rng, 16)));
    }
  }
  std::ostringstream os;
  os << "max relative error " << worst;
  c.require(worst < 1e-4, os.str() + " >= 1e-4");
  if (c.ok) c.detail = os.str();
  return c;
}

// 3. Ball layout at 32x32 under the default schedule: in-box mass >= 0.85 on
//    every frame, CoM error <= 2 cells, and the energy trace non-increasing
//    over >= 95% of updates, across 20 seeds.
Check guidance_convergence() {
  Check c;
  auto ball = load_dsl("dsl/ball.txt");
  double worst_mass = 1.0, worst_com = 0.0;
  long flat = 0, pairs = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto r = guidance::run_guidance(ball, {}, {}, 32, 32, s);
    worst_mass = std::min(worst_mass, r.metrics.min_mass);
    worst_com = std::max(worst_com, r.metrics.max_com_err);
    for (std::size_t i = 0; i + 1 < r.trace.size(); ++i) {
      ++pairs;
      flat += r.trace[i + 1].e_total <= r.trace[i].e_total + 1e-12;
    }
  }
  double frac = static_cast<double>(flat) / static_cast<double>(pairs);
  std::ostringstream os;
  os << "min_mass " << worst_mass << ", max_com_err " << worst_com
     << ", non-increasing " << frac;
  c.require(worst_mass >= 0.85, os.str());
  c.require(worst_com <= 2.0, os.str());
  c.require(frac >= 0.95, os.str());
  if (c.ok) c.detail = os.str();
  return c;
}

// 4. On the slow-pan layout (consecutive boxes >= 70% IoU) the CoM velocity
//    term strictly reduces the velocity error, averaged over 20 seeds.
Check com_ablation() {
  Check c;
  auto pan = load_dsl("dsl/slow_pan.txt");
  for (std::size_t f = 0; f + 1 < pan.frames.size(); ++f) {
    double overlap = iou(pan.frames[f].boxes.at(0), pan.frames[f + 1].boxes.at(0));
    c.require(overlap >= 0.70, "fixture overlap " + std::to_string(overlap) + " < 0.70");
  }
  double with_com = 0.0, without = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    energy::EnergyConfig off;
    off.com_weight = 0.0;
    with_com += guidance::run_guidance(pan, {}, {}, 16, 16, s).metrics.mean_vel_err;
    without += guidance::run_guidance(pan, {}, off, 16, 16, s).metrics.mean_vel_err;
  }
  with_com /= 20.0;
  without /= 20.0;
  std::ostringstream os;
  os << "mean_vel_err " << with_com << " (com 0.03) vs " << without << " (com 0)";
  c.require(with_com < without, os.str());
  if (c.ok) c.detail = os.str();
  return c;
}

// 5. Seed-0 suite: oracle layouts pass 500/500, mutated layouts fail 500/500.
Check verifier_soundness() {
  Check c;
  auto suite = bench::generate_suite(0);
  int oracle_pass = 0, mutant_fail = 0;
  for (const auto& p : suite) {
    auto oracle = bench::synthesize_oracle_dsl(p);
    oracle_pass += bench::verify(p, oracle).pass;
    mutant_fail += !bench::verify(p, bench::mutate_to_fail(p, oracle, p.index)).pass;
  }
  std::ostringstream os;
  os << "oracle " << oracle_pass << "/500, mutants failing " << mutant_fail << "/500";
  c.require(oracle_pass == 500 && mutant_fail == 500, os.str());
  if (c.ok) c.detail = os.str();
  return c;
}

// 6. Alignment (mean in-box mass, ball at 32x32, 10 seeds) improves strictly
//    with 1 -> 3 -> 5 repeats and moves < 2% absolute from 5 -> 7.
Check repeat_trend() {
  Check c;
  auto ball = load_dsl("dsl/ball.txt");
  std::vector<double> mass;
  for (int reps : {1, 3, 5, 7}) {
    double m = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      guidance::GuidanceSchedule sch;
      sch.repeats_per_step = reps;
      m += guidance::run_guidance(ball, sch, {}, 32, 32, s).metrics.mean_mass;
    }
    mass.push_back(m / 10.0);
  }
  std::ostringstream os;
  os << "mean mass at 1/3/5/7 repeats: " << mass[0] << " " << mass[1] << " "
     << mass[2] << " " << mass[3];
  c.require(mass[0] < mass[1] && mass[1] < mass[2], os.str());
  c.require(std::abs(mass[3] - mass[2]) < 0.02, os.str());
  if (c.ok) c.detail = os.str();
  return c;
}

// 7. Replayed recorded completions over the 50-prompt stratified subsample
//    land within 10 points of a 98% macro average.
Check replay_accuracy() {
  Check c;
  auto suite = bench::generate_suite(0);
  std::erase_if(suite, [](const bench::BenchmarkPrompt& p) { return p.index % 100 >= 10; });
  c.require(suite.size() == 50, "subsample size " + std::to_string(suite.size()));

  auto tmpl = prompting::PromptTemplate::load(data_path("prompt_template.txt"));
  auto examples = prompting::load_examples(data_dir(), 3);
  llm::LlmConfig cfg;
  cfg.cache_dir = data_path("replay/cache");
  bench::DslGenerator generator = [&](const bench::BenchmarkPrompt& p, int g) {
    auto bundle = prompting::make_bundle(tmpl, examples, p.text);
    llm::ReplayBackend backend;
    return llm::generate_dsl(bundle, cfg, backend, g).parsed.dsl;
  };
  auto report = bench::run_benchmark(suite, generator, 2, 4);
  double avg = report.macro_average();
  std::ostringstream os;
  os << "macro average " << avg * 100.0 << "% vs 98%";
  c.require(std::abs(avg - 0.98) <= 0.10, os.str());
  if (c.ok) c.detail = os.str();
  return c;
}

// 8. Ball holds gravity and the elastic bounce, the painting recedes, and a
//    synthetic non-accelerating (slowing) fall fails gravity.
Check physics_fixtures() {
  Check c;
  auto ball = load_dsl("dsl/ball.txt");
  auto traj = trajectory_of(ball, 0);
  double gy = physics::default_ground_y(ball, traj);
  c.require(physics::check_gravity(traj, gy).holds, "ball gravity does not hold");
  c.require(physics::check_bounce(traj, gy, true).holds, "ball elastic bounce does not hold");

  auto painting = parse_dsl(
      prompting::load_example(data_path("examples/03_painting.txt")).assistant_text());
  auto pt = trajectory_of(painting.dsl, painting.dsl.frames.front().boxes.front().id);
  c.require(physics::check_perspective(pt, true).holds, "painting does not recede");

  Trajectory slowing;
  slowing.id = 0;
  double y = 100.0;
  double dy = 50.0;
  for (int f = 1; f <= 5; ++f) {
    slowing.samples.push_back({f, {220.0, y}, 1600.0});
    slowing.present.push_back(true);
    y += dy;
    dy -= 10.0;  // decelerating fall: never valid before contact
  }
  c.require(!physics::check_gravity(slowing, 472.0).holds,
            "non-accelerating fall passes gravity");
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Check (*run)();
    double budget_seconds;  // 0: no bound
  };
  const Criterion criteria[] = {
      {"fixture fidelity", fixture_fidelity, 1.0},
      {"gradient correctness", gradient_correctness, 5.0},
      {"guidance convergence", guidance_convergence, 30.0},
      {"CoM-term ablation", com_ablation, 60.0},
      {"verifier soundness", verifier_soundness, 10.0},
      {"repeat-count trend", repeat_trend, 300.0},
      {"replayed stage-one accuracy", replay_accuracy, 0.0},
      {"physics fixtures", physics_fixtures, 1.0},
  };

  int failures = 0;
  for (std::size_t i = 0; i < std::size(criteria); ++i) {
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = criteria[i].run();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (criteria[i].budget_seconds > 0 && secs >= criteria[i].budget_seconds) {
      c.ok = false;
      c.detail += (c.detail.empty() ? "" : "; ") + std::string("over the ") +
                  std::to_string(criteria[i].budget_seconds) + "s budget";
    }
    failures += !c.ok;
    std::printf("[%s] criterion %zu: %s%s%s (%.2fs)\n", c.ok ? "PASS" : "FAIL", i + 1,
                criteria[i].name, c.detail.empty() ? "" : " - ", c.detail.c_str(), secs);
  }
  return failures;
}
