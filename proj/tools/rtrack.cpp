#include "rtrack/rtrack.hpp"
#include "rtrack/remote.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kRuntime = 3 };

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

class Log {
 public:
  void set(Level l) { level_ = l; }
  void operator()(Level l, const std::string& msg) const {
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    if (l <= level_) std::cerr << "[" << names[static_cast<int>(l)] << "] " << msg << '\n';
  }

 private:
  Level level_ = Level::Warn;
};

Log logger;

struct Globals {
  std::uint64_t seed = 42;
  std::string output_dir = "results";
  std::string log_level = "warn";
};

// Stable per-(sequence, expression) stream derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& a, const std::string& b) {
  std::uint64_t h = 1469598103934665603ull ^ seed;
  for (const std::string* s : {&a, &b}) {
    for (const unsigned char c : *s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  }
  return h;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

int exit_code_for(rtrack::ErrorCode c) {
  using E = rtrack::ErrorCode;
  switch (c) {
    case E::InvalidConfig:
    case E::EmptyQuery:
      return kUsage;
    case E::BackendFailure:
    case E::RemoteError:
    case E::ProtocolError:
    case E::DegenerateState:
    case E::InvalidCost:
    case E::FrameOrder:
      return kRuntime;
    default:
      return kInput;
  }
}

void write_json_file(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw rtrack::Error(rtrack::ErrorCode::IoError, "cannot write " + p.string());
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw rtrack::Error(rtrack::ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json metrics_json(const rtrack::MetricReport& m) {
  return {{"HOTA", m.hota},   {"DetA", m.deta},   {"AssA", m.assa},   {"DetRe", m.detre},
          {"DetPr", m.detpr}, {"AssRe", m.assre}, {"AssPr", m.asspr}, {"LocA", m.loca}};
}

// ---------------------------------------------------------------- synth

struct SynthOpts {
  std::string dest;
  rtrack::SynthConfig cfg;
};

int cmd_synth(const SynthOpts& o, const Globals& g) {
  rtrack::SynthConfig cfg = o.cfg;
  cfg.seed = g.seed;
  cfg.validate();
  const fs::path dest = o.dest.empty() ? fs::path(g.output_dir) / cfg.name : fs::path(o.dest);
  rtrack::synth_generate(cfg, dest);
  std::cout << "wrote " << cfg.n_frames << " frames, " << cfg.n_targets << " targets to "
            << dest.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- track

struct TrackOpts {
  std::string dataset;
  std::string expression;
  std::string backend = "oracle";
  rtrack::TrackerConfig tracker;
  rtrack::PerturbationConfig noise;
  std::string cache_dir;
  std::string endpoint;
  int timeout_ms = 0;
  int retries = 2;
  double max_failed_frames = 0.1;
};

int cmd_track(const TrackOpts& o, const Globals& g) {
  o.tracker.validate();
  o.noise.validate();
  if (!(o.max_failed_frames >= 0.0 && o.max_failed_frames <= 1.0))
    throw rtrack::Error(rtrack::ErrorCode::InvalidConfig, "--max-failed-frames must lie in [0,1]");

  rtrack::RemoteConfig remote;
  if (o.backend == "remote") {
    remote.endpoint = o.endpoint;
    remote.retries = o.retries;
    remote = rtrack::RemoteConfig::from_env(remote);
    if (o.timeout_ms > 0) remote.timeout_ms = o.timeout_ms;
    if (remote.endpoint.empty())
      throw rtrack::Error(rtrack::ErrorCode::InvalidConfig,
                          "--backend remote needs --endpoint or REFTRACK_ENDPOINT");
  } else if (o.backend == "parser" && o.cache_dir.empty()) {
    throw rtrack::Error(rtrack::ErrorCode::InvalidConfig, "--backend parser needs --cache-dir");
  }

  const auto roots = rtrack::list_sequences(o.dataset);
  std::vector<rtrack::LoadedSequence> seqs;
  for (const auto& r : roots) seqs.push_back(rtrack::load_sequence(r));

  std::cout << pad_right("sequence", 16) << pad_right("expression", 32) << pad("frames", 8)
            << pad("tracks", 8) << pad("boxes", 8) << pad("failed", 8) << '\n';
  int matched = 0;
  bool over_tolerance = false;
  for (const auto& s : seqs) {
    for (const auto& e : s.expressions) {
      if (!o.expression.empty() && e.expression != o.expression) continue;
      ++matched;
      std::unique_ptr<rtrack::DetectorBackend> backend;
      if (o.backend == "oracle") {
        rtrack::PerturbationConfig p = o.noise;
        p.seed = derive_seed(g.seed, s.manifest.name, e.expression);
        backend = std::make_unique<rtrack::OracleBackend>(s.gt, e, p);
      } else if (o.backend == "parser") {
        backend = std::make_unique<rtrack::ParserBackend>(fs::path(o.cache_dir) / s.manifest.name /
                                                          rtrack::expression_slug(e.expression));
      } else {
        backend = std::make_unique<rtrack::RemoteBackend>(remote);
      }

      logger(Level::Info, "tracking " + s.manifest.name + " / " + e.expression);
      rtrack::TrackingResult res = rtrack::run_sequence(*backend, s.manifest, e.expression, o.tracker);
      for (const auto& w : res.warnings) logger(Level::Warn, s.manifest.name + ": " + w);

      const fs::path out =
          fs::path(g.output_dir) / s.manifest.name / (rtrack::expression_slug(e.expression) + ".txt");
      rtrack::write_results(res, out);

      std::set<int> ids;
      for (const auto& [f, boxes] : res.frames)
        for (const auto& b : boxes) ids.insert(b.id);
      const auto failed = res.warnings.size();
      std::cout << pad_right(s.manifest.name, 16) << pad_right(e.expression, 32)
                << pad(std::to_string(res.frame_count), 8) << pad(std::to_string(ids.size()), 8)
                << pad(std::to_string(res.box_count()), 8) << pad(std::to_string(failed), 8) << '\n';
      if (static_cast<double>(failed) > o.max_failed_frames * res.frame_count) over_tolerance = true;
    }
  }
  if (matched == 0)
    throw rtrack::Error(rtrack::ErrorCode::NoData, "no expression matched '" + o.expression + "'");
  if (over_tolerance) {
    logger(Level::Error, "backend failures exceeded --max-failed-frames");
    return kRuntime;
  }
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
  std::string predictions;
  std::string dataset;
  std::string aggregation = "micro";
  bool per_expression = false;
  std::string report;
};

void print_metric_header(std::size_t label_width) {
  std::cout << pad_right("", label_width);
  for (const char* h : {"HOTA", "DetA", "AssA", "DetRe", "DetPr", "AssRe", "AssPr", "LocA"})
    std::cout << pad(h, 8);
  std::cout << '\n';
}

void print_metric_row(const std::string& label, std::size_t label_width, const rtrack::MetricReport& m) {
  std::cout << pad_right(label, label_width);
  for (const double v : {m.hota, m.deta, m.assa, m.detre, m.detpr, m.assre, m.asspr, m.loca})
    std::cout << pad(pct(v), 8);
  std::cout << '\n';
}

int cmd_eval(const EvalOpts& o, const Globals&) {
  const auto mode = o.aggregation == "macro" ? rtrack::Aggregation::Macro : rtrack::Aggregation::Micro;
  if (!fs::is_directory(o.predictions))
    throw rtrack::Error(rtrack::ErrorCode::NoData, "predictions directory not found: " + o.predictions);

  std::vector<rtrack::ExpressionPair> pairs;
  int found = 0;
  for (const auto& root : rtrack::list_sequences(o.dataset)) {
    const auto seq = rtrack::load_sequence(root);
    for (const auto& e : seq.expressions) {
      rtrack::ExpressionPair pr;
      pr.expression = seq.manifest.name + "/" + e.expression;
      pr.gt = rtrack::expression_ground_truth(seq, e);
      const fs::path p =
          fs::path(o.predictions) / seq.manifest.name / (rtrack::expression_slug(e.expression) + ".txt");
      if (fs::is_regular_file(p)) {
        ++found;
        pr.pred = rtrack::load_results(p, pr.gt.name, pr.gt.frame_count, pr.gt.dims);
      } else {
        logger(Level::Warn, "no predictions for " + pr.expression + ", scoring as empty");
        pr.pred.name = pr.gt.name;
        pr.pred.frame_count = pr.gt.frame_count;
        pr.pred.dims = pr.gt.dims;
      }
      pairs.push_back(std::move(pr));
    }
  }
  if (found == 0)
    throw rtrack::Error(rtrack::ErrorCode::NoData, "no prediction files under " + o.predictions);

  const auto overall = rtrack::evaluate_expression_set(pairs, mode);
  std::size_t w = 10;
  if (o.per_expression)
    for (const auto& pr : pairs) w = std::max(w, pr.expression.size() + 2);

  print_metric_header(w);
  json per = json::array();
  if (o.per_expression) {
    for (const auto& pr : pairs) {
      const auto m = rtrack::evaluate(pr.pred, pr.gt);
      print_metric_row(pr.expression, w, m);
      per.push_back({{"expression", pr.expression}, {"metrics", metrics_json(m)}});
    }
  }
  print_metric_row(o.aggregation == "macro" ? "macro" : "combined", w, overall);

  if (!o.report.empty()) {
    json alphas = json::array();
    for (const auto& a : overall.per_alpha)
      alphas.push_back({{"alpha", a.alpha}, {"HOTA", a.hota}, {"DetA", a.deta}, {"AssA", a.assa},
                        {"LocA", a.loca}});
    json rep = {{"aggregation", o.aggregation},
                {"expressions", pairs.size()},
                {"metrics", metrics_json(overall)},
                {"per_alpha", alphas}};
    if (o.per_expression) rep["per_expression"] = per;
    write_json_file(o.report, rep);
  }
  return kOk;
}

// ---------------------------------------------------------------- reward

struct RewardOpts {
  std::string completions;
  std::string dataset;
  double phase = 0.0;
  std::string output;
  rtrack::RewardConfig cfg;
};

int cmd_reward(const RewardOpts& o, const Globals&) {
  o.cfg.validate();
  if (!(o.phase >= 0.0 && o.phase <= 1.0))
    throw rtrack::Error(rtrack::ErrorCode::InvalidConfig, "--phase must lie in [0,1]");

  std::map<std::string, rtrack::LoadedSequence> seqs;
  for (const auto& root : rtrack::list_sequences(o.dataset)) {
    auto s = rtrack::load_sequence(root);
    const std::string name = s.manifest.name;
    seqs.emplace(name, std::move(s));
  }

  std::ifstream in(o.completions);
  if (!in) throw rtrack::Error(rtrack::ErrorCode::IoError, "cannot read " + o.completions);
  std::ofstream file_out;
  if (!o.output.empty()) {
    if (fs::path(o.output).has_parent_path()) fs::create_directories(fs::path(o.output).parent_path());
    file_out.open(o.output, std::ios::binary | std::ios::trunc);
    if (!file_out) throw rtrack::Error(rtrack::ErrorCode::IoError, "cannot write " + o.output);
  }
  std::ostream& out = o.output.empty() ? std::cout : file_out;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fail = [&](const std::string& why) {
      return rtrack::Error(rtrack::ErrorCode::ParseError,
                           o.completions + ":" + std::to_string(lineno) + ": " + why);
    };
    json rec;
    std::string seq_name, completion, expression;
    int frame = 0;
    std::optional<long long> length;
    std::optional<rtrack::ImageDims> model_dims;
    try {
      rec = json::parse(line);
      seq_name = rec.at("sequence").get<std::string>();
      frame = rec.at("frame").get<int>();
      completion = rec.at("completion").get<std::string>();
      if (rec.contains("expression")) expression = rec.at("expression").get<std::string>();
      if (rec.contains("length")) length = rec.at("length").get<long long>();
      if (rec.contains("model_width"))
        model_dims = rtrack::ImageDims{rec.at("model_width").get<int>(), rec.at("model_height").get<int>()};
    } catch (const json::exception& ex) {
      throw fail(ex.what());
    }
    const auto it = seqs.find(seq_name);
    if (it == seqs.end()) throw fail("unknown sequence '" + seq_name + "'");
    const auto& s = it->second;
    if (frame < 1 || frame > s.manifest.frame_count) throw fail("frame out of range");

    const rtrack::ExpressionAnnotation* expr = nullptr;
    if (!expression.empty()) {
      for (const auto& e : s.expressions)
        if (e.expression == expression) expr = &e;
      if (!expr) throw fail("unknown expression '" + expression + "'");
    }
    std::vector<rtrack::BBox> gts;
    for (const auto& e : s.gt.at(frame))
      if (!expr || (expr->target(e.id) && expr->target(e.id)->covers(frame))) gts.push_back(e.box);

    const auto r = rtrack::composite_reward(completion, length.value_or(rtrack::approx_token_count(completion)),
                                            gts, model_dims.value_or(s.manifest.dims), s.manifest.dims,
                                            o.phase, o.cfg);
    json row = {{"sequence", seq_name},
                {"frame", frame},
                {"r_format", r.r_format},
                {"r_len", r.r_len},
                {"r_str", r.r_str},
                {"r_oer", r.r_oer},
                {"r_pdr", r.r_pdr},
                {"ctr", r.uses_pdr ? "pdr" : "oer"},
                {"r_ctr", r.r_ctr},
                {"r_total", r.total},
                {"matched_gt", r.match.matched_gt},
                {"iou_score", r.match.iou_score},
                {"n_det", r.match.n_det},
                {"n_gt", r.match.n_gt}};
    if (!expression.empty()) row["expression"] = expression;
    out << row.dump() << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- gspo-demo

struct DemoOpts {
  rtrack::gspo::DemoConfig cfg;
  bool no_cas = false;
  int print_every = 10;
  std::string report;
};

int cmd_gspo_demo(const DemoOpts& o, const Globals& g) {
  rtrack::gspo::DemoConfig cfg = o.cfg;
  cfg.seed = g.seed;
  cfg.gspo.clipped_advantage_scaling = !o.no_cas;
  if (!(cfg.probe_sigma > 0))
    throw rtrack::Error(rtrack::ErrorCode::InvalidConfig, "--probe-sigma must be positive");
  const auto rep = rtrack::gspo::run_demo(cfg);

  std::cout << "advantages: "
            << (o.no_cas ? "plain standardization" : "clipped scaling, scale_max " + fixed(cfg.gspo.scale_max, 2))
            << "\n";
  std::cout << pad("step", 6) << pad("objective", 14) << pad("mean ratio", 14) << pad("max|A|", 12)
            << pad("E[reward]", 12) << '\n';
  for (const auto& s : rep.trace) {
    if (o.print_every <= 0 || (s.step % o.print_every != 0 && s.step != 1)) continue;
    std::cout << pad(std::to_string(s.step), 6) << pad(fixed(s.objective, 6), 14)
              << pad(fixed(s.mean_ratio, 6), 14) << pad(fixed(s.max_abs_advantage, 4), 12)
              << pad(fixed(s.expected_reward, 4), 12) << '\n';
  }
  const auto& p = rep.probe;
  const double bound = cfg.gspo.scale_max * p.max_abs_deviation;
  std::cout << "expected reward: " << fixed(rep.initial_expected_reward, 4) << " -> "
            << fixed(rep.final_expected_reward, 4) << '\n'
            << "training max |A|: " << fixed(rep.max_abs_advantage, 4)
            << " (bound |A| <= scale_max*|r-mu| " << (rep.advantage_bound_held ? "held" : "violated")
            << ")\n"
            << "stability probe (sigma = " << p.injected_sigma << "):\n"
            << "  standardized max |A| = " << p.raw_max_abs_advantage << " ("
            << (p.raw_exceeds_1e5 ? "exceeds" : "within") << " 1e5)\n"
            << "  clipped max |A|      = " << p.cas_max_abs_advantage << " ("
            << (p.cas_within_bound ? "within" : "exceeds") << " scale_max*max|r-mu| = " << bound << ")\n"
            << "gradient check max relative error: " << rep.gradient_check_error << '\n';

  if (!o.report.empty()) {
    json trace = json::array();
    for (const auto& s : rep.trace)
      trace.push_back({{"step", s.step}, {"objective", s.objective}, {"mean_ratio", s.mean_ratio},
                       {"max_abs_advantage", s.max_abs_advantage}, {"expected_reward", s.expected_reward}});
    write_json_file(o.report,
                    {{"cas", !o.no_cas},
                     {"seed", cfg.seed},
                     {"initial_expected_reward", rep.initial_expected_reward},
                     {"final_expected_reward", rep.final_expected_reward},
                     {"max_abs_advantage", rep.max_abs_advantage},
                     {"advantage_bound_held", rep.advantage_bound_held},
                     {"gradient_check_error", rep.gradient_check_error},
                     {"probe",
                      {{"sigma", p.injected_sigma},
                       {"rewards", p.rewards},
                       {"max_abs_deviation", p.max_abs_deviation},
                       {"raw_max_abs_advantage", p.raw_max_abs_advantage},
                       {"cas_max_abs_advantage", p.cas_max_abs_advantage},
                       {"raw_exceeds_1e5", p.raw_exceeds_1e5},
                       {"cas_within_bound", p.cas_within_bound}}},
                     {"trace", trace}});
  }
  return kOk;
}

// ---------------------------------------------------------------- parse

struct ParseOpts {
  std::string file;
  bool as_json = false;
  rtrack::RewardConfig cfg;
};

int cmd_parse(const ParseOpts& o, const Globals&) {
  const std::string text = read_file(o.file);
  const auto p = rtrack::parse_answer(text);
  const long long len = rtrack::approx_token_count(text);
  if (o.as_json) {
    json boxes = json::array();
    for (const auto& b : p.boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
    std::cout << json{{"has_think", p.has_think},
                      {"has_answer", p.has_answer},
                      {"answer_is_pure", p.answer_is_pure},
                      {"boxes", boxes},
                      {"dropped", p.dropped},
                      {"r_format", rtrack::format_reward(p)},
                      {"approx_length", len},
                      {"r_len", rtrack::length_reward(len, o.cfg)}}
                     .dump()
              << '\n';
    return kOk;
  }
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  std::cout << "think block:   " << yn(p.has_think) << '\n'
            << "answer block:  " << yn(p.has_answer) << '\n'
            << "answer pure:   " << yn(p.answer_is_pure) << '\n'
            << "boxes:         " << p.boxes.size() << '\n';
  for (const auto& b : p.boxes) std::cout << "  " << b << '\n';
  std::cout << "dropped:       " << p.dropped << '\n'
            << "format reward: " << rtrack::format_reward(p) << '\n'
            << "length (approx tokens): " << len << ", length reward " << fixed(rtrack::length_reward(len, o.cfg), 4)
            << '\n';
  return kOk;
}

void add_tracker_flags(CLI::App* c, rtrack::TrackerConfig& t) {
  c->add_option("--tau-iou", t.tau_iou, "IoU gate for detection-to-track matching")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  c->add_option("--delta-max", t.delta_max, "Missed frames tolerated before a track ends")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c->add_option("--min-hits", t.min_hits, "Matched frames required before a track is reported")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  c->add_flag("--emit-temporary", t.emit_temporary, "Also report predicted boxes of unmatched tracks");
  c->add_flag("--freeze-aspect-velocity", t.noise.freeze_aspect_velocity,
              "Hold the aspect ratio constant between frames");
}

void add_reward_flags(CLI::App* c, rtrack::RewardConfig& r) {
  c->add_option("--alpha", r.alpha, "Matched-count weight of the output-encouragement reward")->capture_default_str();
  c->add_option("--beta", r.beta, "IoU weight of the output-encouragement reward")->capture_default_str();
  c->add_option("--gamma", r.gamma, "Detection-count exponent of the precision reward")->capture_default_str();
  c->add_option("--lambda", r.lambda, "Recall weight of the precision reward")->capture_default_str();
  c->add_option("--l-min", r.l_min, "Length window start")->capture_default_str();
  c->add_option("--l-low", r.l_low, "Length plateau start")->capture_default_str();
  c->add_option("--l-high", r.l_high, "Length plateau end")->capture_default_str();
  c->add_option("--l-max", r.l_max, "Length window end")->capture_default_str();
  c->add_option("--w-format", r.w_format, "Weight of the format reward")->capture_default_str();
  c->add_option("--w-length", r.w_length, "Weight of the length reward")->capture_default_str();
  c->add_option("--w-str", r.w_str, "Weight of the structured-output reward")->capture_default_str();
  c->add_option("--w-ctr", r.w_ctr, "Weight of the detection reward")->capture_default_str();
  c->add_option("--tau-match", r.tau_match, "IoU needed for a detection to count as a match")->capture_default_str();
  c->add_option("--phase-switch", r.phase_switch, "Training phase at which the precision reward takes over")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Referring multi-object tracking toolkit for paired RGB and thermal video"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random stream in the run")->capture_default_str();
  app.add_option("--output-dir", g.output_dir, "Directory for generated files")->capture_default_str();
  app.add_option("--log-level", g.log_level, "error, warn, info or debug")
      ->capture_default_str()
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  SynthOpts synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic sequence");
  c_synth->add_option("dest", synth.dest, "Destination directory (default: <output-dir>/<name>)");
  c_synth->add_option("--name", synth.cfg.name, "Sequence name")->capture_default_str();
  c_synth->add_option("--targets", synth.cfg.n_targets, "Number of targets")->capture_default_str();
  c_synth->add_option("--frames", synth.cfg.n_frames, "Number of frames")->capture_default_str();
  c_synth->add_option("--width", synth.cfg.dims.width, "Image width")->capture_default_str();
  c_synth->add_option("--height", synth.cfg.dims.height, "Image height")->capture_default_str();
  c_synth->add_option("--speed-min", synth.cfg.speed_min, "Minimum speed in px/frame")->capture_default_str();
  c_synth->add_option("--speed-max", synth.cfg.speed_max, "Maximum speed in px/frame")->capture_default_str();
  c_synth->add_option("--size-min", synth.cfg.size_min, "Minimum box side in px")->capture_default_str();
  c_synth->add_option("--size-max", synth.cfg.size_max, "Maximum box side in px")->capture_default_str();

  TrackOpts track;
  auto* c_track = app.add_subcommand("track", "Detect and track every expression of a dataset");
  c_track->add_option("dataset", track.dataset, "Sequence directory or a directory of sequences")->required();
  c_track->add_option("--expression", track.expression, "Only track this expression");
  c_track->add_option("--backend", track.backend, "oracle, parser or remote")
      ->capture_default_str()
      ->check(CLI::IsMember({"oracle", "parser", "remote"}));
  add_tracker_flags(c_track, track.tracker);
  c_track->add_option("--p-miss", track.noise.p_miss, "Oracle: per-target dropout probability")->capture_default_str();
  c_track->add_option("--jitter", track.noise.jitter_sigma, "Oracle: center noise as a fraction of box size")
      ->capture_default_str();
  c_track->add_option("--scale-noise", track.noise.scale_sigma, "Oracle: log-size noise")->capture_default_str();
  c_track->add_option("--fp-rate", track.noise.fp_rate, "Oracle: expected false positives per frame")
      ->capture_default_str();
  c_track->add_option("--cache-dir", track.cache_dir,
                      "Parser: completions stored as <dir>/<sequence>/<expression>/NNNNNN.txt");
  c_track->add_option("--endpoint", track.endpoint, "Remote: service URL (falls back to REFTRACK_ENDPOINT)");
  c_track->add_option("--timeout-ms", track.timeout_ms, "Remote: request timeout (falls back to REFTRACK_TIMEOUT_MS)");
  c_track->add_option("--retries", track.retries, "Remote: retries per frame")->capture_default_str();
  c_track->add_option("--max-failed-frames", track.max_failed_frames,
                      "Fraction of frames per expression the backend may fail before exit code 3")
      ->capture_default_str();

  EvalOpts eval;
  auto* c_eval = app.add_subcommand("eval", "Score tracking results against ground truth");
  c_eval->add_option("predictions", eval.predictions, "Directory written by 'track'")->required();
  c_eval->add_option("dataset", eval.dataset, "Sequence directory or a directory of sequences")->required();
  c_eval->add_option("--aggregation", eval.aggregation, "micro pools counts, macro averages expressions")
      ->capture_default_str()
      ->check(CLI::IsMember({"micro", "macro"}));
  c_eval->add_flag("--per-expression", eval.per_expression, "Print one row per expression");
  c_eval->add_option("--report", eval.report, "Write a JSON report to this path");

  RewardOpts reward;
  auto* c_reward = app.add_subcommand("reward", "Score model completions against ground truth");
  c_reward->add_option("completions", reward.completions,
                       "JSON lines with sequence, frame, completion and optional expression, length, "
                       "model_width, model_height")
      ->required();
  c_reward->add_option("dataset", reward.dataset, "Sequence directory or a directory of sequences")->required();
  c_reward->add_option("--phase", reward.phase, "Training progress in [0,1]")->capture_default_str();
  c_reward->add_option("--output", reward.output, "Write JSON lines here instead of stdout");
  add_reward_flags(c_reward, reward.cfg);

  DemoOpts demo;
  auto* c_demo = app.add_subcommand("gspo-demo", "Optimize a toy policy with the group objective");
  c_demo->add_option("--group-size", demo.cfg.gspo.group_size, "Sequences per group")->capture_default_str();
  c_demo->add_option("--epsilon", demo.cfg.gspo.epsilon, "Ratio clip range")->capture_default_str();
  c_demo->add_option("--beta-kl", demo.cfg.gspo.beta_kl, "KL penalty weight")->capture_default_str();
  c_demo->add_option("--scale-max", demo.cfg.gspo.scale_max, "Cap on the advantage scale")->capture_default_str();
  c_demo->add_flag("--no-cas", demo.no_cas, "Use plain (r - mu) / sigma advantages");
  c_demo->add_option("--steps", demo.cfg.steps, "Optimization steps")->capture_default_str();
  c_demo->add_option("--lr", demo.cfg.learning_rate, "Step size")->capture_default_str();
  c_demo->add_option("--vocab", demo.cfg.vocab, "Toy vocabulary size")->capture_default_str();
  c_demo->add_option("--max-len", demo.cfg.max_len, "Longest sampled sequence")->capture_default_str();
  c_demo->add_option("--probe-sigma", demo.cfg.probe_sigma, "Group sigma injected into the stability probe")
      ->capture_default_str();
  c_demo->add_option("--print-every", demo.print_every, "Trace row interval (0 hides the trace)")
      ->capture_default_str();
  c_demo->add_option("--report", demo.report, "Write a JSON report to this path");

  ParseOpts parse;
  auto* c_parse = app.add_subcommand("parse", "Check a completion against the answer format");
  c_parse->add_option("file", parse.file, "Text file holding one completion")->required();
  c_parse->add_flag("--json", parse.as_json, "Print JSON");
  add_reward_flags(c_parse, parse.cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  static const std::map<std::string, Level> levels{
      {"error", Level::Error}, {"warn", Level::Warn}, {"info", Level::Info}, {"debug", Level::Debug}};
  logger.set(levels.at(g.log_level));

  try {
    if (*c_synth) return cmd_synth(synth, g);
    if (*c_track) return cmd_track(track, g);
    if (*c_eval) return cmd_eval(eval, g);
    if (*c_reward) return cmd_reward(reward, g);
    if (*c_demo) return cmd_gspo_demo(demo, g);
    if (*c_parse) return cmd_parse(parse, g);
  } catch (const rtrack::Error& e) {
    logger(Level::Error, e.what());
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    logger(Level::Error, e.what());
    return kInput;
  } catch (const std::exception& e) {
    logger(Level::Error, e.what());
    return kRuntime;
  }
  return kUsage;
}
