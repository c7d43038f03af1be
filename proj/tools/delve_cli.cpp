// Command-line front end for the simulated-client exploration harness.
//
// Exit codes: 0 = success; 1 = completed with failures (aborted sessions,
// invalid personas, replay inconsistency, calibration fail); 2 = unusable
// configuration or input.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <delve/delve.hpp>

namespace {

delve::BackendDescriptor load_descriptor_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw delve::ConfigError("cannot read backend descriptor: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw delve::ConfigError(std::string("backend descriptor: invalid JSON: ") +
                             e.what());
  }
  return delve::backend_descriptor_from_json(doc);
}

int command_run(const std::string& config_path_arg, const std::string& seed_dir,
                const std::vector<std::string>& presets, const std::string& personas,
                const std::string& out, int parallelism, bool dry) {
  std::string config_path = config_path_arg;
  if (!seed_dir.empty()) {
    delve::fixtures::seed_fixtures(seed_dir);
    std::cout << "seeded fixture tree under " << seed_dir << "\n";
    if (config_path.empty())
      config_path = (std::filesystem::path(seed_dir) / "config.json").string();
  }
  if (config_path.empty())
    throw delve::ConfigError("run: --config (or --seed-fixtures) is required");

  delve::ExperimentConfig config = delve::load_experiment_config(config_path);
  if (!presets.empty()) {
    for (const auto& label : presets) delve::preset_by_label(label);
    config.presets = presets;
  }
  if (!personas.empty()) config.personas_dir = personas;
  if (!out.empty()) config.output_dir = out;
  if (parallelism > 0) config.parallelism = parallelism;

  if (dry) {
    std::cout << delve::dry_run(config);
    return 0;
  }

  const delve::BatchSummary summary = delve::run_batch(config);
  std::cout << "sessions run: " << summary.sessions_run
            << "  aborted: " << summary.aborted << "\n";
  for (const auto& failure : summary.persona_failures)
    std::cout << "persona " << failure.file << ": FAILED (" << failure.message
              << ")\n";
  std::cout << "report: " << summary.report_path << "\n\n";
  std::cout << delve::render_report(config.output_dir, delve::ReportFormat::text);
  return summary.ok ? 0 : 1;
}

int command_report(const std::string& out, const std::string& format) {
  std::cout << delve::render_report(out, delve::report_format_from(format));
  return 0;
}

int command_replay(const std::string& session_path) {
  const delve::ReplayResult result = delve::replay_session(session_path);
  std::cout << result.text;
  return result.consistent ? 0 : 1;
}

int command_validate(const std::string& personas) {
  const delve::ValidationReport report = delve::validate_personas(personas);
  for (const auto& [file, message] : report.rows)
    std::cout << file << ": " << message << "\n";
  if (report.rows.empty()) std::cout << "no persona files found\n";
  return report.all_ok && !report.rows.empty() ? 0 : 1;
}

int command_calibrate(const std::string& labeled_path, const std::string& judge_path,
                      const std::string& prompts_dir) {
  const auto labeled = delve::load_labeled_transcripts(labeled_path);
  const delve::BackendDescriptor judge = load_descriptor_file(judge_path);
  const delve::PromptLibrary prompts = prompts_dir.empty()
                                           ? delve::PromptLibrary::embedded()
                                           : delve::PromptLibrary::load(prompts_dir);
  const delve::CalibrationRun run = delve::run_calibration(labeled, judge, prompts);
  std::cout << run.text;
  return run.report.pass ? 0 : 1;
}

int command_prompts(const std::string& out) {
  const delve::PromptLibrary prompts = delve::PromptLibrary::embedded();
  prompts.dump(out);
  std::cout << "wrote " << prompts.names().size() << " prompt template(s) to " << out
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated-client exploration harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a batch of sessions and write reports");
  std::string run_config, run_seed, run_personas, run_out;
  std::vector<std::string> run_presets;
  int run_parallelism = 0;
  bool run_dry = false;
  run->add_option("--config", run_config, "Experiment config JSON file");
  run->add_option("--seed-fixtures", run_seed,
                  "Write the scripted fixture tree here first (and run it when "
                  "--config is omitted)");
  run->add_option("--preset", run_presets,
                  "Difficulty preset label(s); overrides the config");
  run->add_option("--personas", run_personas, "Personas directory override");
  run->add_option("--out", run_out, "Output directory override");
  run->add_option("--parallelism", run_parallelism, "Worker thread override");
  run->add_flag("--dry-run", run_dry, "Build every prompt but call no backend");

  auto* report = app.add_subcommand("report", "Render reports from a finished batch");
  std::string report_out, report_format = "text";
  report->add_option("--out", report_out, "Batch output directory")->required();
  report->add_option("--format", report_format, "text, json, or csv");

  auto* replay = app.add_subcommand("replay", "Re-read a session transcript and "
                                              "verify its disclosure bookkeeping");
  std::string replay_session;
  replay->add_option("--session", replay_session, "Transcript file (.jsonl)")
      ->required();

  auto* validate = app.add_subcommand("validate", "Check persona files");
  std::string validate_personas;
  validate->add_option("--personas", validate_personas, "Personas directory")
      ->required();

  auto* calibrate = app.add_subcommand(
      "calibrate", "Check that a judge separates labeled transcripts");
  std::string calibrate_labeled, calibrate_judge, calibrate_prompts;
  calibrate->add_option("--labeled", calibrate_labeled, "Labeled transcripts JSON")
      ->required();
  calibrate->add_option("--judge", calibrate_judge, "Judge backend descriptor JSON")
      ->required();
  calibrate->add_option("--prompts", calibrate_prompts,
                        "Prompt directory (default: embedded)");

  auto* prompts = app.add_subcommand("prompts", "Write the embedded prompt "
                                                "templates to a directory");
  std::string prompts_out;
  prompts->add_option("--out", prompts_out, "Destination directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed())
      return command_run(run_config, run_seed, run_presets, run_personas, run_out,
                         run_parallelism, run_dry);
    if (report->parsed()) return command_report(report_out, report_format);
    if (replay->parsed()) return command_replay(replay_session);
    if (validate->parsed()) return command_validate(validate_personas);
    if (calibrate->parsed())
      return command_calibrate(calibrate_labeled, calibrate_judge, calibrate_prompts);
    if (prompts->parsed()) return command_prompts(prompts_out);
  } catch (const delve::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
