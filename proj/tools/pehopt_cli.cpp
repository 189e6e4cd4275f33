// Command-line front end: synth | optimize | cluster | evaluate | campaign | report.
// Exit codes: 0 success, 1 validation error, 2 compute failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "peh/errors.hpp"
#include "peh/pipeline.hpp"
#include "peh/response.hpp"

namespace fs = std::filesystem;
using peh::CampaignConfig;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "campaign configuration JSON")->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "override the campaign seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--threads", opts.threads, "worker thread count");
}

CampaignConfig load_config(const CommonOpts& opts) {
  CampaignConfig config = CampaignConfig::from_json_file(opts.config_path);
  if (opts.seed_set) config.seed = opts.seed;
  if (opts.threads > 0) config.threads = opts.threads;
  if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
  return config;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw peh::ValidationError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw peh::ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

int run_synth(const CommonOpts& opts) {
  CampaignConfig config = load_config(opts);
  config.validate();
  const fs::path root = fs::path(config.output_dir) / "windows";
  fs::create_directories(root);
  for (const auto& loc : config.locations) {
    const auto windows = peh::acquire_windows(config, loc);
    for (size_t i = 0; i < windows.size(); ++i) {
      std::ostringstream csv;
      csv << "sample_rate_hz," << windows[i].sample_rate_hz << "\n";
      for (double s : windows[i].samples) csv << s << "\n";
      write_text(root / (loc + "_" + std::to_string(i) + ".csv"), csv.str());
    }
    std::cout << loc << ": " << windows.size() << " windows\n";
  }
  return 0;
}

int run_optimize(const CommonOpts& opts, const std::string& only_location, bool write_traces) {
  CampaignConfig config = load_config(opts);
  config.validate();
  for (const auto& loc : config.locations) {
    if (!only_location.empty() && loc != only_location) continue;
    auto windows = peh::acquire_windows(config, loc);
    peh::PsoConfig pso = config.pso;
    pso.seed = config.seed;
    const auto result = peh::optimize_all(windows, loc, pso, config.model, config.threads);
    write_text(fs::path(config.output_dir) / loc / "optima.json",
               peh::optima_to_json(result.results, result.failures));
    if (write_traces)
      write_text(fs::path(config.output_dir) / loc / "traces.csv",
                 peh::optima_traces_csv(result.results));
    std::cout << loc << ": " << result.results.size() << " optima, " << result.failures.size()
              << " failures\n";
  }
  return 0;
}

int run_cluster(const CommonOpts& opts, const std::string& optima_path) {
  CampaignConfig config = load_config(opts);
  auto [optima, failures] = peh::optima_from_json(slurp(optima_path));
  if (optima.empty()) throw peh::ValidationError("no optima in '" + optima_path + "'");
  auto [candidates, report] = peh::select_candidates(optima, config.model, config.clustering);
  const std::string loc = optima.front().location_id;
  write_text(fs::path(config.output_dir) / loc / "candidates.json",
             peh::candidates_to_json(candidates, report));
  std::cout << loc << ": k = " << report.k_chosen << ", " << candidates.size()
            << " candidates\n";
  return 0;
}

int run_evaluate(const CommonOpts& opts, const std::string& candidates_path) {
  CampaignConfig config = load_config(opts);
  config.validate();
  auto [candidates, report] = peh::candidates_from_json(slurp(candidates_path));
  if (candidates.empty()) throw peh::ValidationError("no candidates to evaluate");
  const std::string loc = candidates.front().member_window_ids.empty()
                              ? config.locations.front()
                              : candidates.front().member_window_ids.front().substr(
                                    0, candidates.front().member_window_ids.front().find('@'));
  auto windows = peh::acquire_windows(config, loc);

  peh::AccelerationWindow record;
  record.location_id = loc;
  record.sample_rate_hz = windows.front().sample_rate_hz;
  for (const auto& w : windows)
    record.samples.insert(record.samples.end(), w.samples.begin(), w.samples.end());

  for (auto& cand : candidates) {
    const auto red = config.model.reduce(cand.centroid);
    cand.energy_24h_joule = peh::simulate(red, record).energy_joule;
  }
  write_text(fs::path(config.output_dir) / loc / "candidates_evaluated.json",
             peh::candidates_to_json(candidates, report));
  for (size_t i = 0; i < candidates.size(); ++i)
    std::cout << "candidate " << i << ": " << candidates[i].energy_24h_joule << " J\n";
  return 0;
}

int run_campaign_cmd(const CommonOpts& opts) {
  CampaignConfig config = load_config(opts);
  const peh::CampaignReport report = peh::run_campaign(config);
  peh::write_campaign_outputs(report, config);
  for (const auto& [loc, energy] : report.ranking)
    std::cout << loc << ": " << energy << " J\n";
  std::cout << "report written to " << config.output_dir << "\n";
  return 0;
}

int run_report(const std::string& report_path, const std::string& out_dir) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(slurp(report_path));
  peh::CampaignReport report;
  for (const auto& l : j.at("locations")) {
    peh::LocationReport loc;
    loc.location_id = l.at("location_id").get<std::string>();
    loc.status = l.at("status").get<std::string>();
    loc.best_candidate_index = l.at("best_candidate_index").get<int>();
    if (l.contains("candidates"))
      for (const auto& c : l.at("candidates")) {
        auto parsed = peh::candidates_from_json(
            nlohmann::ordered_json{{"candidates", {c}},
                                   {"clustering",
                                    {{"k_chosen", 1},
                                     {"silhouette_by_k", nlohmann::ordered_json::array()},
                                     {"assignments", nlohmann::ordered_json::array()},
                                     {"feature_mean", nlohmann::ordered_json::array()},
                                     {"feature_std", nlohmann::ordered_json::array()}}}}
                .dump());
        loc.candidates.push_back(parsed.first.front());
      }
    if (l.contains("clustering")) {
      for (const auto& e : l["clustering"].at("silhouette_by_k"))
        loc.clustering.silhouette_by_k.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
      loc.clustering.k_chosen = l["clustering"].at("k_chosen").get<int>();
      loc.clustering.assignments = l["clustering"].at("assignments").get<std::vector<int>>();
    }
    for (const auto& o : l.at("optima")) {
      auto parsed = peh::optima_from_json(
          nlohmann::ordered_json{{"optima", {o}}, {"failures", nlohmann::ordered_json::array()}}
              .dump());
      loc.optima.push_back(parsed.first.front());
    }
    report.locations.push_back(std::move(loc));
  }
  peh::emit_plots(report, out_dir.empty() ? "plots" : out_dir);
  std::cout << "plots written\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bridge-mounted piezoelectric harvester design optimization"};
  app.require_subcommand(1);

  CommonOpts synth_opts, opt_opts, cluster_opts, eval_opts, campaign_opts;
  std::string only_location, optima_path, candidates_path, report_path, report_out;

  auto* synth = app.add_subcommand("synth", "generate acceleration windows");
  add_common(synth, synth_opts);
  auto* optimize = app.add_subcommand("optimize", "per-window swarm optimization");
  add_common(optimize, opt_opts);
  optimize->add_option("--location", only_location, "restrict to one location");
  bool write_traces = false;
  optimize->add_flag("--traces", write_traces, "also write per-window iteration traces CSV");
  auto* cluster = app.add_subcommand("cluster", "cluster per-window optima into candidates");
  add_common(cluster, cluster_opts);
  cluster->add_option("--optima", optima_path, "optima.json from the optimize stage")->required();
  auto* evaluate = app.add_subcommand("evaluate", "24-h candidate energy evaluation");
  add_common(evaluate, eval_opts);
  evaluate->add_option("--candidates", candidates_path, "candidates.json")->required();
  auto* campaign = app.add_subcommand("campaign", "run every stage");
  add_common(campaign, campaign_opts);
  auto* report = app.add_subcommand("report", "emit plots from a campaign report");
  report->add_option("--report", report_path, "campaign_report.json")->required();
  report->add_option("--out", report_out, "plot output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return run_synth(synth_opts);
    if (optimize->parsed()) return run_optimize(opt_opts, only_location, write_traces);
    if (cluster->parsed()) return run_cluster(cluster_opts, optima_path);
    if (evaluate->parsed()) return run_evaluate(eval_opts, candidates_path);
    if (campaign->parsed()) return run_campaign_cmd(campaign_opts);
    if (report->parsed()) return run_report(report_path, report_out);
  } catch (const peh::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const peh::FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const peh::BoundsError& e) {
    std::cerr << "bounds error: " << e.what() << "\n";
    return 1;
  } catch (const peh::ArgumentError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "compute failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
