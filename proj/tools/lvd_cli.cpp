// lvd: one binary driving the whole pipeline. Subcommands map one-to-one to
// library modules: gen-dsl (prompting + llm), bench (suite + verifiers),
// guide-sim (attention substrate), plus validate/physics/render/grad-check.

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lvd/llm_live.hpp"
#include "lvd/lvd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lvd;

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& body) {
  fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << body;
}

void err_json(const std::string& kind, const std::string& detail) {
  json j;
  j["error"] = kind;
  j["detail"] = detail;
  std::cerr << j.dump() << "\n";
}

int exit_code_for(llm::LlmErrorKind k) {
  switch (k) {
    case llm::LlmErrorKind::AllAttemptsFailed: return 2;
    case llm::LlmErrorKind::MissingFixture: return 3;
    case llm::LlmErrorKind::Transport: return 4;
    case llm::LlmErrorKind::IO: return 5;
  }
  return 1;
}

// Settings resolve as flags > environment > config file. CLI11's built-in
// config support runs the file before the environment, so both fallbacks are
// applied here by hand after the parse.
struct Settings {
  std::map<std::string, std::string> file;

  void load(const std::string& path) {
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) {
      auto strip = [](std::string s) {
        size_t b = s.find_first_not_of(" \t\r");
        size_t e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      line = strip(line);
      if (line.empty() || line[0] == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) throw IoError("config line without '=': " + line);
      file[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
    }
  }

  template <class T>
  void fill(const CLI::App* cmd, const std::string& flag, const std::string& key,
            T& var) const {
    if (cmd->count(flag) > 0) return;
    std::string env_name = "LVD_";
    for (char c : key) env_name += c == '-' ? '_' : std::toupper(static_cast<unsigned char>(c));
    std::string raw;
    if (const char* e = std::getenv(env_name.c_str()); e && *e) {
      raw = e;
    } else if (auto it = file.find(key); it != file.end()) {
      raw = it->second;
    } else {
      return;
    }
    if constexpr (std::is_same_v<T, std::string>) {
      var = raw;
    } else {
      std::istringstream in(raw);
      in >> var;
      if (in.fail()) throw IoError("bad value for " + key + ": " + raw);
    }
  }
};

DynamicSceneLayout load_dsl_file(const std::string& path) {
  return parse_dsl(slurp(path)).dsl;
}

std::unique_ptr<llm::Backend> make_backend(const std::string& name) {
  if (name == "replay") return std::make_unique<llm::ReplayBackend>();
  if (name == "live") return std::make_unique<llm::LiveBackend>();
  throw IoError("unknown backend: " + name);
}

// --- gen-dsl ---------------------------------------------------------------

struct GenDslArgs {
  std::string caption;
  std::string backend = "replay";
  std::string model = "gpt-4";
  std::string endpoint;
  std::string cache_dir;
  std::string out;
  int examples = 3;
  int sample = 0;
};

int run_gen_dsl(const GenDslArgs& a) {
  const std::string root = data_dir();
  auto tmpl = prompting::PromptTemplate::load(root + "/prompt_template.txt");
  auto examples = prompting::load_examples(root, a.examples);
  auto bundle = prompting::make_bundle(tmpl, std::move(examples), a.caption);

  llm::LlmConfig cfg;
  cfg.model = a.model;
  if (!a.endpoint.empty()) cfg.endpoint = a.endpoint;
  cfg.cache_dir = a.cache_dir.empty() ? root + "/replay/cache" : a.cache_dir;

  auto backend = make_backend(a.backend);
  auto rec = llm::generate_dsl(bundle, cfg, *backend, a.sample);

  const std::string dsl_text = serialize_dsl(rec.parsed.dsl);
  if (a.out.empty()) {
    std::cout << dsl_text << "\n";
    return 0;
  }
  fs::create_directories(a.out);
  spit(a.out + "/dsl.txt", dsl_text + "\n");
  spit(a.out + "/dsl.json", dsl_to_json(rec.parsed.dsl).dump(2) + "\n");
  spit(a.out + "/reasoning.txt", rec.parsed.reasoning + "\n");
  spit(a.out + "/completion.txt", rec.attempts.back().raw);
  json attempts = json::array();
  for (const auto& at : rec.attempts)
    attempts.push_back({{"attempt", at.attempt_index},
                        {"prompt_hash", at.prompt_hash},
                        {"outcome", llm::to_string(at.outcome)},
                        {"wall_seconds", at.wall_seconds}});
  spit(a.out + "/attempts.json", attempts.dump(2) + "\n");
  std::cout << a.out << "/dsl.txt\n";
  return 0;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
  std::uint64_t seed = 0;
  int per_task = 100;
  std::string task;
  std::string suite_file;
  std::string backend = "oracle";
  int generations = 2;
  int jobs = 1;
  std::string model = "gpt-4";
  std::string endpoint;
  std::string cache_dir;
  int examples = 3;
  std::string dsl_dir;
  std::string out;
  std::string verdicts_file;
  std::string csv_file;
};

std::vector<bench::BenchmarkPrompt> load_suite(const BenchArgs& a) {
  auto suite = a.suite_file.empty() ? bench::generate_suite(a.seed, a.per_task)
                                    : bench::suite_from_jsonl(slurp(a.suite_file));
  if (!a.task.empty()) {
    auto kind = bench::task_from_name(a.task);
    if (!kind) throw IoError("unknown task: " + a.task);
    std::erase_if(suite, [&](const bench::BenchmarkPrompt& p) { return p.task != *kind; });
  }
  return suite;
}

int run_bench_gen(const BenchArgs& a) {
  auto suite = load_suite(a);
  std::string jsonl = bench::suite_to_jsonl(suite);
  if (a.out.empty())
    std::cout << jsonl;
  else
    spit(a.out, jsonl);
  return 0;
}

void emit_report(const bench::VerdictReport& report, const BenchArgs& a) {
  if (!a.verdicts_file.empty()) spit(a.verdicts_file, bench::verdicts_to_jsonl(report));
  if (!a.csv_file.empty()) spit(a.csv_file, bench::report_to_csv(report));
  std::cout << bench::report_to_table(report);
}

int run_bench_run(const BenchArgs& a) {
  auto suite = load_suite(a);

  bench::DslGenerator generator;
  if (a.backend == "oracle") {
    generator = [](const bench::BenchmarkPrompt& p, int) {
      return bench::synthesize_oracle_dsl(p);
    };
  } else if (a.backend == "mutant") {
    std::uint64_t seed = a.seed;
    generator = [seed](const bench::BenchmarkPrompt& p, int g) {
      auto oracle = bench::synthesize_oracle_dsl(p);
      return bench::mutate_to_fail(p, oracle, seed ^ (static_cast<std::uint64_t>(p.index) * 8191 + g));
    };
  } else {
    const std::string root = data_dir();
    auto tmpl = prompting::PromptTemplate::load(root + "/prompt_template.txt");
    auto examples = prompting::load_examples(root, a.examples);
    llm::LlmConfig cfg;
    cfg.model = a.model;
    if (!a.endpoint.empty()) cfg.endpoint = a.endpoint;
    cfg.cache_dir = a.cache_dir.empty() ? root + "/replay/cache" : a.cache_dir;
    std::string backend_name = a.backend;
    generator = [tmpl, examples, cfg, backend_name](const bench::BenchmarkPrompt& p,
                                                    int g) {
      auto bundle = prompting::make_bundle(tmpl, examples, p.text);
      auto backend = make_backend(backend_name);
      return llm::generate_dsl(bundle, cfg, *backend, g).parsed.dsl;
    };
  }

  auto report = bench::run_benchmark(suite, generator, a.generations, a.jobs);
  emit_report(report, a);
  return 0;
}

int run_bench_verify(const BenchArgs& a) {
  auto suite = load_suite(a);
  std::string dir = a.dsl_dir;
  bench::DslGenerator generator = [dir](const bench::BenchmarkPrompt& p, int g) {
    std::string per_gen = dir + "/" + std::to_string(p.index) + "_" + std::to_string(g) + ".txt";
    std::string shared = dir + "/" + std::to_string(p.index) + ".txt";
    std::string path = fs::exists(per_gen) ? per_gen : shared;
    if (!fs::exists(path)) throw bench::BenchError("no DSL file for prompt " + std::to_string(p.index));
    return load_dsl_file(path);
  };
  auto report = bench::run_benchmark(suite, generator, a.generations, a.jobs);
  emit_report(report, a);
  return 0;
}

int run_bench_report(const BenchArgs& a) {
  bench::VerdictReport report;
  std::istringstream in(slurp(a.verdicts_file));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    bench::PromptVerdict v;
    v.prompt_index = j.at("prompt_index").get<int>();
    auto kind = bench::task_from_name(j.at("task").get<std::string>());
    if (!kind) throw IoError("unknown task in verdicts: " + line);
    v.task = *kind;
    v.generation = j.at("generation").get<int>();
    v.pass = j.at("pass").get<bool>();
    v.reason = j.value("reason", "");
    int ti = static_cast<int>(v.task);
    report.attempted[ti] += 1;
    if (v.pass) report.passed[ti] += 1;
    report.verdicts.push_back(std::move(v));
  }
  if (!a.csv_file.empty()) spit(a.csv_file, bench::report_to_csv(report));
  std::cout << bench::report_to_table(report);
  return 0;
}

// --- guide-sim ---------------------------------------------------------------

struct GuideArgs {
  std::string dsl_file;
  int hw = 16;
  guidance::GuidanceSchedule schedule;
  energy::EnergyConfig energy;
  std::uint64_t seed = 0;
  std::string trace_out;
  std::string metrics_out;
  std::string pgm_dir;
  int cell_scale = 8;
};

int run_guide_sim(const GuideArgs& a) {
  auto dsl = load_dsl_file(a.dsl_file);
  auto res = guidance::run_guidance(dsl, a.schedule, a.energy, a.hw, a.hw, a.seed);

  std::string metrics = guidance::metrics_to_json(res.metrics).dump(2) + "\n";
  std::cout << metrics;
  if (!a.metrics_out.empty()) spit(a.metrics_out, metrics);
  if (!a.trace_out.empty()) spit(a.trace_out, guidance::trace_csv(res.trace));
  if (!a.pgm_dir.empty()) {
    fs::create_directories(a.pgm_dir);
    const auto& st = res.state;
    for (int f = 0; f < st.frames; ++f)
      for (int oi = 0; oi < st.object_count(); ++oi) {
        std::string name = a.pgm_dir + "/frame" + std::to_string(f + 1) + "_id" +
                           std::to_string(st.ids[oi]) + ".pgm";
        spit(name, render::render_attention_pgm(st.attention(f, oi), a.cell_scale));
      }
  }
  return 0;
}

// --- validate / physics / render / grad-check -------------------------------

int run_validate(const std::vector<std::string>& files) {
  int dirty = 0;
  for (const auto& f : files) {
    auto dsl = load_dsl_file(f);
    auto violations = validate_dsl(dsl);
    if (violations.empty()) {
      std::cout << f << ": clean\n";
      continue;
    }
    dirty = 1;
    for (const auto& v : violations) std::cout << f << ": " << v.describe() << "\n";
  }
  return dirty;
}

struct PhysicsArgs {
  std::string dsl_file;
  std::string check = "gravity";
  int id = -1;
  double ground_y = -1.0;
  double eps = 0.0;
};

int run_physics(const PhysicsArgs& a) {
  auto dsl = load_dsl_file(a.dsl_file);
  int id = a.id;
  if (id < 0) {
    if (dsl.frames.empty() || dsl.frames.front().boxes.empty())
      throw physics::PhysicsError("TooFewFrames: layout has no boxes");
    id = dsl.frames.front().boxes.front().id;
  }
  auto traj = trajectory_of(dsl, id);
  double gy = a.ground_y >= 0.0 ? a.ground_y : physics::default_ground_y(dsl, traj);

  physics::PhysicsVerdict v;
  if (a.check == "gravity")
    v = physics::check_gravity(traj, gy);
  else if (a.check == "bounce-elastic")
    v = physics::check_bounce(traj, gy, true);
  else if (a.check == "bounce-inelastic")
    v = physics::check_bounce(traj, gy, false);
  else if (a.check == "perspective-receding")
    v = physics::check_perspective(traj, true, a.eps);
  else if (a.check == "perspective-approaching")
    v = physics::check_perspective(traj, false, a.eps);
  else
    throw IoError("unknown check: " + a.check);

  std::cout << physics::verdict_to_json(v).dump(2) << "\n";
  return v.holds ? 0 : 1;
}

struct RenderArgs {
  std::string dsl_file;
  std::string out_dir = ".";
  bool animated = false;
  bool no_ids = false;
  bool no_names = false;
  std::uint64_t palette_seed = 0;
};

int run_render(const RenderArgs& a) {
  auto dsl = load_dsl_file(a.dsl_file);
  render::RenderOptions opt;
  opt.show_ids = !a.no_ids;
  opt.show_names = !a.no_names;
  opt.palette_seed = a.palette_seed;
  fs::create_directories(a.out_dir);
  if (a.animated) {
    std::string path = a.out_dir + "/animated.svg";
    spit(path, render::render_dsl_svg_animated(dsl, opt));
    std::cout << path << "\n";
    return 0;
  }
  auto docs = render::render_dsl_svg_frames(dsl, opt);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::string path = a.out_dir + "/frame_" + std::to_string(i + 1) + ".svg";
    spit(path, docs[i]);
    std::cout << path << "\n";
  }
  return 0;
}

struct GradArgs {
  int instances = 20;
  int seeds = 5;
  int hw = 16;
  double h = 1e-5;
};

Mat random_positive(Rng& rng, int n) {
  Mat a(n, n);
  for (double& x : a.v) x = 0.05 + rng.uniform();
  return a;
}

Mat random_mask(Rng& rng, int n) {
  Mat m(n, n);
  for (double& x : m.v) x = rng.uniform() < 0.4 ? 1.0 : 0.0;
  m.v[0] = 1.0;  // both regions nonempty
  m.v[m.size() - 1] = 0.0;
  return m;
}

// Gap between the k-th and (k+1)-th values of one mask region. Central
// differences cross the top-k selection boundary when it shrinks below 2h, so
// tie-free instances keep it clear of the step size.
double boundary_gap(const Mat& A, const Mat& M, double keep) {
  std::vector<double> v;
  for (int i = 0; i < A.size(); ++i)
    if (M.v[i] == keep) v.push_back(A.v[i]);
  int k = energy::topk_count(0.75, static_cast<int>(v.size()));
  std::sort(v.begin(), v.end(), std::greater<>());
  return k < static_cast<int>(v.size()) ? v[k - 1] - v[k] : 1.0;
}

int run_grad_check(const GradArgs& a) {
  double worst_topk = 0.0, worst_com = 0.0;
  for (int s = 0; s < a.seeds; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    for (int i = 0; i < a.instances; ++i) {
      Mat M = random_mask(rng, a.hw);
      Mat A = random_positive(rng, a.hw);
      while (boundary_gap(A, M, 1.0) < 10 * a.h || boundary_gap(A, M, 0.0) < 10 * a.h)
        A = random_positive(rng, a.hw);
      worst_topk = std::max(worst_topk, energy::fd_check_topk(A, M, {}, a.h));

      // CoM instances: the energy differentiates smoothly in every argument,
      // so the pair check runs on generic positive maps.
      Mat At = random_positive(rng, a.hw);
      Mat At1 = random_positive(rng, a.hw);
      Mat Mt = random_positive(rng, a.hw);
      Mat Mt1 = random_positive(rng, a.hw);
      worst_com = std::max(worst_com, energy::fd_check_com(At, At1, Mt, Mt1, a.h));
    }
  }
  std::cout << "e_topk max rel err: " << worst_topk << "\n";
  std::cout << "e_com  max rel err: " << worst_com << "\n";
  return (worst_topk < 1e-4 && worst_com < 1e-4) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layout-grounded video pipeline: DSL generation, rule-based "
               "benchmark, attention guidance simulation, rendering."};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config follow the subcommand name
  std::string config_path;
  app.add_option("--config", config_path, "key = value defaults file (flags > env > file)");

  GenDslArgs gd;
  auto* gen = app.add_subcommand("gen-dsl", "Generate a scene layout for a caption");
  gen->add_option("--caption", gd.caption, "text prompt")->required();
  gen->add_option("--backend", gd.backend, "replay|live")->check(CLI::IsMember({"replay", "live"}));
  gen->add_option("--model", gd.model, "model name");
  gen->add_option("--endpoint", gd.endpoint, "chat-completions URL");
  gen->add_option("--cache-dir", gd.cache_dir, "completion cache root");
  gen->add_option("--examples", gd.examples, "in-context example count")->check(CLI::IsMember({1, 3, 5}));
  gen->add_option("--sample", gd.sample, "independent sample index");
  gen->add_option("--out", gd.out, "output directory (default: layout to stdout)");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Five-task prompt benchmark");
  bench_cmd->require_subcommand(1);
  auto add_suite_flags = [&](CLI::App* c) {
    c->add_option("--seed", ba.seed, "suite seed");
    c->add_option("--per-task", ba.per_task, "prompts per task");
    c->add_option("--task", ba.task, "restrict to one task");
    c->add_option("--suite", ba.suite_file, "suite JSONL (default: generate)");
  };
  auto add_report_flags = [&](CLI::App* c) {
    c->add_option("--verdicts", ba.verdicts_file, "write per-generation verdicts JSONL");
    c->add_option("--csv", ba.csv_file, "write per-task rates CSV");
  };
  auto* bgen = bench_cmd->add_subcommand("gen", "Emit the prompt suite as JSONL");
  add_suite_flags(bgen);
  bgen->add_option("--out", ba.out, "suite file (default: stdout)");
  auto* brun = bench_cmd->add_subcommand("run", "Generate layouts and verify them");
  add_suite_flags(brun);
  brun->add_option("--backend", ba.backend, "oracle|mutant|replay|live")
      ->check(CLI::IsMember({"oracle", "mutant", "replay", "live"}));
  brun->add_option("--generations", ba.generations, "layouts per prompt");
  brun->add_option("--jobs", ba.jobs, "worker threads");
  brun->add_option("--model", ba.model, "model name");
  brun->add_option("--endpoint", ba.endpoint, "chat-completions URL");
  brun->add_option("--cache-dir", ba.cache_dir, "completion cache root");
  brun->add_option("--examples", ba.examples, "in-context example count")->check(CLI::IsMember({1, 3, 5}));
  add_report_flags(brun);
  auto* bver = bench_cmd->add_subcommand("verify", "Verify layout files on disk");
  add_suite_flags(bver);
  bver->add_option("--dsl-dir", ba.dsl_dir, "directory of <index>[_<gen>].txt files")->required();
  bver->add_option("--generations", ba.generations, "layouts per prompt");
  bver->add_option("--jobs", ba.jobs, "worker threads");
  add_report_flags(bver);
  auto* brep = bench_cmd->add_subcommand("report", "Summarize a verdicts file");
  brep->add_option("--verdicts", ba.verdicts_file, "verdicts JSONL")->required();
  brep->add_option("--csv", ba.csv_file, "write per-task rates CSV");

  GuideArgs ga;
  auto* guide = app.add_subcommand("guide-sim", "Run attention guidance on a layout");
  guide->add_option("--dsl", ga.dsl_file, "layout file")->required();
  guide->add_option("--hw", ga.hw, "attention grid side");
  guide->add_option("--steps", ga.schedule.total_steps, "denoising steps");
  guide->add_option("--guided-steps", ga.schedule.guided_steps, "steps with guidance");
  guide->add_option("--repeats", ga.schedule.repeats_per_step, "updates per guided step");
  guide->add_option("--scale", ga.schedule.scale, "guidance scale");
  guide->add_option("--com-weight", ga.energy.com_weight, "center-of-mass term weight");
  guide->add_option("--w-fg", ga.energy.w_fg, "foreground top-k weight");
  guide->add_option("--w-bg", ga.energy.w_bg, "background top-k weight");
  guide->add_option("--topk-fraction", ga.energy.topk_fraction, "top-k fraction");
  guide->add_option("--seed", ga.seed, "substrate seed");
  guide->add_option("--trace-out", ga.trace_out, "energy trace CSV");
  guide->add_option("--metrics-out", ga.metrics_out, "metrics JSON (also printed)");
  guide->add_option("--pgm-dir", ga.pgm_dir, "write per-slice attention PGMs here");
  guide->add_option("--cell-scale", ga.cell_scale, "PGM pixels per cell");

  std::vector<std::string> validate_files;
  auto* val = app.add_subcommand("validate", "Check layout files for violations");
  val->add_option("files", validate_files, "layout files")->required();

  PhysicsArgs pa;
  auto* phys = app.add_subcommand("physics", "Check one physics property of a trajectory");
  phys->add_option("--dsl", pa.dsl_file, "layout file")->required();
  phys->add_option("--check", pa.check,
                   "gravity|bounce-elastic|bounce-inelastic|perspective-receding|"
                   "perspective-approaching")
      ->check(CLI::IsMember({"gravity", "bounce-elastic", "bounce-inelastic",
                             "perspective-receding", "perspective-approaching"}));
  phys->add_option("--id", pa.id, "object id (default: first box)");
  phys->add_option("--ground-y", pa.ground_y, "ground line (default: bottom minus box height)");
  phys->add_option("--eps", pa.eps, "area tolerance for perspective checks");

  RenderArgs ra;
  auto* rend = app.add_subcommand("render", "Render a layout to SVG");
  rend->add_option("--dsl", ra.dsl_file, "layout file")->required();
  rend->add_option("--out-dir", ra.out_dir, "output directory");
  rend->add_flag("--animated", ra.animated, "one SMIL-animated document");
  rend->add_flag("--no-ids", ra.no_ids, "omit id prefix in labels");
  rend->add_flag("--no-names", ra.no_names, "omit labels entirely");
  rend->add_option("--palette-seed", ra.palette_seed, "box color seed");

  GradArgs gr;
  auto* grad = app.add_subcommand("grad-check", "Finite-difference check of energy gradients");
  grad->add_option("--instances", gr.instances, "instances per seed");
  grad->add_option("--seeds", gr.seeds, "seed count");
  grad->add_option("--hw", gr.hw, "grid side");
  grad->add_option("--fd-step", gr.h, "finite-difference step");

  try {
    app.parse(argc, argv);

    Settings st;
    st.fill(&app, "--config", "config", config_path);
    if (!config_path.empty()) st.load(config_path);
    st.fill(gen, "--model", "model", gd.model);
    st.fill(gen, "--endpoint", "endpoint", gd.endpoint);
    st.fill(gen, "--cache-dir", "cache-dir", gd.cache_dir);
    st.fill(gen, "--examples", "examples", gd.examples);
    st.fill(brun, "--model", "model", ba.model);
    st.fill(brun, "--endpoint", "endpoint", ba.endpoint);
    st.fill(brun, "--cache-dir", "cache-dir", ba.cache_dir);
    st.fill(brun, "--examples", "examples", ba.examples);
    st.fill(brun, "--jobs", "jobs", ba.jobs);
    st.fill(bver, "--jobs", "jobs", ba.jobs);

    if (gen->parsed()) return run_gen_dsl(gd);
    if (bgen->parsed()) return run_bench_gen(ba);
    if (brun->parsed()) return run_bench_run(ba);
    if (bver->parsed()) return run_bench_verify(ba);
    if (brep->parsed()) return run_bench_report(ba);
    if (guide->parsed()) return run_guide_sim(ga);
    if (val->parsed()) return run_validate(validate_files);
    if (phys->parsed()) return run_physics(pa);
    if (rend->parsed()) return run_render(ra);
    if (grad->parsed()) return run_grad_check(gr);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const llm::LlmError& e) {
    err_json(llm::to_string(e.kind), e.detail);
    return exit_code_for(e.kind);
  } catch (const IoError& e) {
    err_json("IO", e.what());
    return 5;
  } catch (const std::exception& e) {
    err_json("InvalidInput", e.what());
    return 2;
  }
}
