#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "forgemorph/costmodel.hpp"
#include "forgemorph/distill.hpp"
#include "forgemorph/dse.hpp"
#include "forgemorph/manifest.hpp"
#include "forgemorph/morph.hpp"
#include "forgemorph/netgraph.hpp"
#include "forgemorph/report.hpp"
#include "forgemorph/streamsim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace forgemorph;

namespace {

bool log_enabled() {
  const char* level = std::getenv("FORGEMORPH_LOG");
  return level != nullptr && std::string(level) != "" && std::string(level) != "off";
}

void log_line(const std::string& message) {
  if (log_enabled()) std::cerr << "[forgemorph] " << message << "\n";
}

std::string format_latency(double seconds) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9e", seconds);
  return buffer;
}

std::string alloc_to_string(const costmodel::PEAllocation& alloc) {
  std::ostringstream out;
  for (size_t i = 0; i < alloc.conv_pe.size(); ++i) {
    if (i) out << '-';
    out << alloc.conv_pe[i];
  }
  out << '/' << alloc.fc_pe;
  return out.str();
}

costmodel::PEAllocation parse_alloc_string(const std::string& text) {
  costmodel::PEAllocation alloc;
  std::string conv_part = text;
  if (const auto colon = text.find(':'); colon != std::string::npos) {
    conv_part = text.substr(0, colon);
    alloc.fc_pe = std::stoi(text.substr(colon + 1));
  }
  std::istringstream stream(conv_part);
  std::string token;
  while (std::getline(stream, token, ',')) {
    if (!token.empty()) alloc.conv_pe.push_back(std::stoi(token));
  }
  if (alloc.conv_pe.empty()) {
    raise(Errc::invalid_argument, "allocation '" + text + "' has no conv entries");
  }
  return alloc;
}

json estimate_to_json(const costmodel::CostEstimate& est) {
  json doc;
  doc["latency_s"] = est.latency_s;
  doc["dsp"] = est.dsp;
  doc["lut"] = est.lut;
  doc["bram"] = est.bram;
  doc["registers"] = est.registers;
  if (est.power_mw) doc["power_mw"] = *est.power_mw;
  return doc;
}

json alloc_to_json(const costmodel::PEAllocation& alloc) {
  return json{{"conv_pe", alloc.conv_pe}, {"fc_pe", alloc.fc_pe}};
}

costmodel::PEAllocation alloc_from_json(const json& doc) {
  costmodel::PEAllocation alloc;
  alloc.conv_pe = doc.at("conv_pe").get<std::vector<int>>();
  alloc.fc_pe = doc.at("fc_pe").get<int>();
  return alloc;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream stream(path, std::ios::binary | std::ios::trunc);
  if (!stream) raise(Errc::io_error, "cannot write '" + path + "'");
  stream << text;
}

std::string read_text(const std::string& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) raise(Errc::io_error, "cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << stream.rdbuf();
  return buffer.str();
}

// ---------------------------------------------------------------- explore

struct ExploreArgs {
  std::string net_path, device_path, terms_path, out_dir;
  dse::MogaConfig moga;
  double max_latency_ms = 0;
  long long max_dsp = 0, max_lut = 0, max_bram = 0;
};

std::string front_csv(const dse::ParetoFront& front) {
  std::ostringstream csv;
  csv << "allocation,latency_s,dsp,lut,bram,feasible\n";
  const auto row = [&](const dse::FrontEntry& entry, bool feasible) {
    csv << alloc_to_string(entry.alloc) << ',' << format_latency(entry.est.latency_s)
        << ',' << entry.est.dsp << ',' << entry.est.lut << ',' << entry.est.bram
        << ',' << (feasible ? 1 : 0) << '\n';
  };
  for (const auto& entry : front.entries) row(entry, true);
  for (const auto& entry : front.near_feasible) row(entry, false);
  return csv.str();
}

json configs_json(const dse::ParetoFront& front, const netgraph::NetworkGraph& graph,
                  const netgraph::DeviceProfile& device) {
  json doc;
  doc["tool_version"] = manifest::kToolVersion;
  doc["network"] = json::parse(netgraph::serialize(graph));
  doc["device"] = json::parse(netgraph::serialize_device_profile(device));
  doc["seed"] = front.seed;
  doc["generations_run"] = front.generations_run;
  doc["evaluations"] = front.evaluations;
  const auto entry_json = [&](const dse::FrontEntry& entry, bool feasible) {
    json obj = alloc_to_json(entry.alloc);
    obj["estimate"] = estimate_to_json(entry.est);
    obj["feasible"] = feasible;
    return obj;
  };
  doc["entries"] = json::array();
  for (const auto& entry : front.entries) doc["entries"].push_back(entry_json(entry, true));
  doc["near_feasible"] = json::array();
  for (const auto& entry : front.near_feasible) {
    doc["near_feasible"].push_back(entry_json(entry, false));
  }
  return doc;
}

int cmd_explore(const ExploreArgs& args) {
  const auto graph = netgraph::parse_network_file(args.net_path);
  const auto device = netgraph::load_device_profile(args.device_path);
  costmodel::TermsOverrides overrides;
  if (!args.terms_path.empty()) {
    overrides = costmodel::load_terms_overrides(args.terms_path);
  }

  dse::ConstraintSet constraints = dse::ConstraintSet::from_device(device);
  if (args.max_latency_ms > 0) constraints.max_latency_s = args.max_latency_ms / 1000.0;
  if (args.max_dsp > 0) constraints.max_dsp = args.max_dsp;
  if (args.max_lut > 0) constraints.max_lut = args.max_lut;
  if (args.max_bram > 0) constraints.max_bram = args.max_bram;

  log_line("exploring '" + graph.name + "' with seed " + std::to_string(args.moga.seed));
  const dse::ParetoFront front =
      dse::explore(graph, device, constraints, args.moga, overrides);

  fs::create_directories(args.out_dir);
  write_text((fs::path(args.out_dir) / "pareto.csv").string(), front_csv(front));
  write_text((fs::path(args.out_dir) / "configs.json").string(),
             configs_json(front, graph, device).dump(2) + "\n");
  std::vector<std::string> inputs = {args.net_path, args.device_path};
  if (!args.terms_path.empty()) inputs.push_back(args.terms_path);
  manifest::write_manifest(
      manifest::make_manifest("explore", inputs, args.moga.seed),
      (fs::path(args.out_dir) / "manifest.json").string());

  std::cout << "Pareto front: " << front.entries.size() << " feasible designs ("
            << front.near_feasible.size() << " near-feasible flagged), "
            << front.generations_run << " generations, " << front.evaluations
            << " evaluations\n";
  std::cout << "allocation        latency_s      dsp      lut     bram\n";
  for (const auto& entry : front.entries) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %12.5e %8lld %8lld %8lld\n",
                  alloc_to_string(entry.alloc).c_str(), entry.est.latency_s,
                  entry.est.dsp, entry.est.lut, entry.est.bram);
    std::cout << line;
  }
  return 0;
}

// --------------------------------------------------------------- estimate

int cmd_estimate(const std::string& net_path, const std::string& device_path,
                 const std::string& terms_path, const std::string& alloc_text,
                 const std::string& alloc_file) {
  const auto graph = netgraph::parse_network_file(net_path);
  const auto device = netgraph::load_device_profile(device_path);
  costmodel::TermsOverrides overrides;
  if (!terms_path.empty()) overrides = costmodel::load_terms_overrides(terms_path);

  costmodel::PEAllocation alloc;
  if (!alloc_file.empty()) {
    alloc = alloc_from_json(json::parse(read_text(alloc_file)));
  } else if (!alloc_text.empty()) {
    alloc = parse_alloc_string(alloc_text);
  } else {
    raise(Errc::invalid_argument, "provide --alloc or --alloc-file");
  }

  const auto est = costmodel::estimate(graph, alloc, device, overrides);
  json doc = estimate_to_json(est);
  doc["allocation"] = alloc_to_json(alloc);
  doc["network"] = graph.name;
  std::cout << doc.dump(2) << "\n";
  return 0;
}

// ------------------------------------------------------------------ morph

json morph_mode_json(const morph::MorphMode& mode) {
  json doc;
  doc["name"] = mode.name;
  doc["kind"] = mode.kind == morph::MorphKind::DepthPrefix ? "depth" : "width";
  if (mode.kind == morph::MorphKind::DepthPrefix) {
    doc["params"] = {{"k", mode.depth_k}};
  } else {
    doc["params"] = {{"fraction", mode.width_fraction}};
  }
  doc["active_alloc"] = alloc_to_json(mode.active_alloc);
  doc["active_filters"] = mode.active_filters;
  doc["estimate"] = estimate_to_json(mode.active);
  doc["resident"] = estimate_to_json(mode.resident);
  doc["switch_latency_s"] = mode.switch_latency_s;
  if (mode.accuracy) doc["accuracy"] = *mode.accuracy;
  return doc;
}

int cmd_morph(const std::string& config_path, int index, const std::string& mode_text,
              const std::string& power_model_path, const std::string& boundaries_csv,
              int class_count, const std::string& manifest_path) {
  const json config = json::parse(read_text(config_path));
  const auto graph = netgraph::parse_network(config.at("network").dump());
  netgraph::DeviceProfile device;
  {
    const json& dev = config.at("device");
    device.name = dev.value("name", std::string{});
    device.dsp_max = dev.at("dsp_max").get<long long>();
    device.lut_max = dev.at("lut_max").get<long long>();
    device.bram_blocks_max = dev.at("bram_blocks_max").get<long long>();
    device.clock_hz = dev.at("clock_hz").get<double>();
    device.fp_rep = dev.value("fp_rep", 16);
  }
  const json& entries = config.at("entries");
  if (index < 0 || index >= static_cast<int>(entries.size())) {
    raise(Errc::invalid_argument,
          "config entry index " + std::to_string(index) + " outside [0, " +
              std::to_string(entries.size()) + ")");
  }
  const auto alloc = alloc_from_json(entries[index]);

  const auto fused = netgraph::fuse_residual_blocks(graph);
  std::vector<std::string> boundaries;
  if (!boundaries_csv.empty()) {
    std::istringstream stream(boundaries_csv);
    std::string token;
    while (std::getline(stream, token, ',')) {
      if (!token.empty()) boundaries.push_back(token);
    }
  } else {
    boundaries = morph::default_boundaries(fused);
  }
  int classes = class_count;
  if (classes == 0) {
    const auto fcs = graph.fc_indices();
    if (fcs.empty()) {
      raise(Errc::invalid_argument, "graph has no FC head; pass --class-count");
    }
    classes = graph.layers[fcs.front()].fc_out;
  }
  const auto blocks = morph::partition_blocks(fused, boundaries, classes);

  morph::MorphMode mode;
  if (mode_text.rfind("depth:", 0) == 0) {
    const int k = std::stoi(mode_text.substr(6));
    mode = morph::depth_mode(fused, blocks, k, alloc, device);
  } else if (mode_text.rfind("width:", 0) == 0) {
    const double fraction = std::stod(mode_text.substr(6));
    mode = morph::width_mode(fused, fraction, alloc, device);
  } else {
    raise(Errc::invalid_argument, "mode must look like depth:K or width:F");
  }

  if (!power_model_path.empty()) {
    const auto model = morph::load_power_model(power_model_path);
    mode.active = morph::with_power(model, mode.active);
    mode.resident = morph::with_power(model, mode.resident);
  }

  json doc;
  if (fs::exists(manifest_path)) {
    doc = json::parse(read_text(manifest_path));
  } else {
    doc["base_config"] = alloc_to_json(alloc);
    doc["network"] = graph.name;
    doc["modes"] = json::array();
  }
  // Replace a mode of the same name, otherwise append.
  json& modes = doc["modes"];
  bool replaced = false;
  for (json& existing : modes) {
    if (existing.value("name", "") == mode.name) {
      existing = morph_mode_json(mode);
      replaced = true;
      break;
    }
  }
  if (!replaced) modes.push_back(morph_mode_json(mode));
  std::vector<std::string> inputs = {config_path};
  if (!power_model_path.empty()) inputs.push_back(power_model_path);
  doc["run"] = json::parse(
      manifest::serialize(manifest::make_manifest("morph", inputs, 0)));
  write_text(manifest_path, doc.dump(2) + "\n");

  std::cout << "mode " << mode.name << ": latency "
            << format_latency(mode.active.latency_s) << " s, dsp-active "
            << mode.active.dsp;
  if (mode.active.power_mw) std::cout << ", power " << *mode.active.power_mw << " mW";
  std::cout << "\n";
  return 0;
}

// -------------------------------------------------------------- calibrate

int cmd_calibrate(const std::string& samples_path, const std::string& out_path) {
  const auto samples = morph::load_power_csv(samples_path);
  const auto model = morph::fit_power_model(samples);
  json doc = json::parse(morph::serialize_power_model(model));
  doc["run"] = json::parse(
      manifest::serialize(manifest::make_manifest("calibrate", {samples_path}, 0)));
  write_text(out_path, doc.dump(2) + "\n");
  std::cout << "power model: base " << model.base_mw << " mW, rms residual "
            << model.fit_residual << " mW\n";
  return 0;
}

// --------------------------------------------------------------- schedule

int cmd_schedule(const std::string& net_path, const std::string& kind_text,
                 const std::string& boundaries_csv, int class_count,
                 const distill::DistillParams& params, const std::string& ladder_csv,
                 const std::string& out_path) {
  const auto graph = netgraph::parse_network_file(net_path);
  const auto fused = netgraph::fuse_residual_blocks(graph);

  std::vector<std::string> boundaries;
  if (!boundaries_csv.empty()) {
    std::istringstream stream(boundaries_csv);
    std::string token;
    while (std::getline(stream, token, ',')) {
      if (!token.empty()) boundaries.push_back(token);
    }
  } else {
    boundaries = morph::default_boundaries(fused);
  }
  int classes = class_count;
  if (classes == 0) {
    const auto fcs = graph.fc_indices();
    if (fcs.empty()) {
      raise(Errc::invalid_argument, "graph has no FC head; pass --class-count");
    }
    classes = graph.layers[fcs.front()].fc_out;
  }
  const auto blocks = morph::partition_blocks(fused, boundaries, classes);

  distill::ScheduleKind kind;
  if (kind_text == "depth") {
    kind = distill::ScheduleKind::Depth;
  } else if (kind_text == "width") {
    kind = distill::ScheduleKind::Width;
  } else {
    raise(Errc::invalid_argument, "--kind must be depth or width");
  }
  std::vector<double> ladder;
  if (!ladder_csv.empty()) {
    std::istringstream stream(ladder_csv);
    std::string token;
    while (std::getline(stream, token, ',')) {
      if (!token.empty()) ladder.push_back(std::stod(token));
    }
  } else {
    ladder = {0.5, 1.0};
  }

  const auto schedule = distill::build_schedule(fused, blocks, kind, params, ladder);
  json doc = json::parse(distill::schedule_to_json(schedule));
  doc["run"] = json::parse(
      manifest::serialize(manifest::make_manifest("schedule", {net_path}, 0)));
  write_text(out_path, doc.dump(2) + "\n");
  std::cout << "wrote " << out_path << " (" << schedule.stages.size() << " stages)\n";
  return 0;
}

// --------------------------------------------------------------- simulate

int cmd_simulate(int width, int height, int kernel, int stride, int pad,
                 const std::string& op, double clock_mhz, bool first,
                 const std::string& terms_path, const std::string& trace_path) {
  costmodel::TermsOverrides overrides;
  if (!terms_path.empty()) overrides = costmodel::load_terms_overrides(terms_path);
  costmodel::LatencyTerms terms = overrides.resolve(kernel, clock_mhz * 1e6);
  if (!first) terms.d_in = 0;

  streamsim::SimResult result;
  if (op == "conv") {
    result = streamsim::simulate_conv_stream_traced(width, height, kernel, stride,
                                                    pad, terms);
  } else if (op == "maxpool" || op == "avgpool") {
    if (pad != 0) raise(Errc::invalid_argument, "pool streams do not take padding");
    result = streamsim::simulate_pool_stream_traced(
        width, height, kernel, stride,
        op == "maxpool" ? costmodel::PoolOp::Max : costmodel::PoolOp::Avg, terms);
  } else {
    raise(Errc::invalid_argument, "op must be conv, maxpool or avgpool");
  }

  if (!trace_path.empty()) {
    std::ofstream stream(trace_path, std::ios::trunc);
    if (!stream) raise(Errc::io_error, "cannot write trace '" + trace_path + "'");
    streamsim::write_trace_csv(stream, result.events);
  }

  json doc;
  doc["cycles_to_first_valid_output"] = result.trace.cycles_to_first_valid_output;
  doc["cycles_total"] = result.trace.cycles_total;
  doc["outputs_emitted"] = result.trace.outputs_emitted;
  std::cout << doc.dump(2) << "\n";
  return 0;
}

// ----------------------------------------------------------------- report

int cmd_report(const std::string& front_path, const std::string& out_path,
               const std::string& format) {
  const auto points = report::load_front_csv(front_path);
  if (format == "csv") {
    write_text(out_path, read_text(front_path));
  } else {
    write_text(out_path, report::render_front_svg(points, "design space front"));
  }
  std::cout << "wrote " << out_path << " (" << points.size() << " points)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CNN-to-FPGA design space exploration and runtime morphing toolchain"};
  app.set_version_flag("--version", manifest::kToolVersion);
  app.require_subcommand(1);

  // explore
  ExploreArgs ex;
  auto* explore = app.add_subcommand("explore", "search PE allocations for a Pareto front");
  explore->add_option("--net", ex.net_path, "network JSON")->required();
  explore->add_option("--device", ex.device_path, "device profile JSON")->required();
  explore->add_option("--terms", ex.terms_path, "latency terms overrides JSON");
  explore->add_option("--out", ex.out_dir, "output directory")->required();
  explore->add_option("--seed", ex.moga.seed, "RNG seed");
  explore->add_option("--population", ex.moga.population_size, "population size (0 = auto)");
  explore->add_option("--generations", ex.moga.max_generations, "generation cap");
  explore->add_option("--crossover-rate", ex.moga.crossover_rate, "crossover probability");
  explore->add_option("--mutation-rate", ex.moga.mutation_rate, "mutation probability");
  explore->add_option("--stagnation", ex.moga.stagnation_window,
                      "generations without improvement before stopping");
  explore->add_option("--jobs", ex.moga.jobs, "parallel fitness evaluation threads");
  explore->add_option("--max-latency-ms", ex.max_latency_ms, "latency budget, ms");
  explore->add_option("--max-dsp", ex.max_dsp, "DSP budget (default: device)");
  explore->add_option("--max-lut", ex.max_lut, "LUT budget (default: device)");
  explore->add_option("--max-bram", ex.max_bram, "BRAM block budget (default: device)");

  // estimate
  std::string est_net, est_device, est_terms, est_alloc, est_alloc_file;
  auto* estimate = app.add_subcommand("estimate", "cost one allocation");
  estimate->add_option("--net", est_net, "network JSON")->required();
  estimate->add_option("--device", est_device, "device profile JSON")->required();
  estimate->add_option("--terms", est_terms, "latency terms overrides JSON");
  estimate->add_option("--alloc", est_alloc, "inline allocation, e.g. 4,8,16:8");
  estimate->add_option("--alloc-file", est_alloc_file, "allocation JSON file");

  // morph
  std::string mo_config, mo_mode, mo_power, mo_boundaries, mo_manifest;
  int mo_index = 0, mo_classes = 0;
  auto* morph_cmd = app.add_subcommand("morph", "derive a runtime mode from a design");
  morph_cmd->add_option("--config", mo_config, "configs.json from explore")->required();
  morph_cmd->add_option("--index", mo_index, "entry index inside the config");
  morph_cmd->add_option("--mode", mo_mode, "depth:K or width:F")->required();
  morph_cmd->add_option("--power-model", mo_power, "calibrated power model JSON");
  morph_cmd->add_option("--boundaries", mo_boundaries, "comma-separated cut layer ids");
  morph_cmd->add_option("--class-count", mo_classes, "output head classes");
  morph_cmd->add_option("--manifest", mo_manifest, "morph manifest to write/extend")
      ->required();

  // calibrate
  std::string cal_samples, cal_out;
  auto* calibrate = app.add_subcommand("calibrate", "fit the affine power model");
  calibrate->add_option("--samples", cal_samples, "CSV dsp,lut,bram,measured_mw")
      ->required();
  calibrate->add_option("--out", cal_out, "power model JSON output")->required();

  // schedule
  std::string sch_net, sch_kind = "depth", sch_boundaries, sch_ladder, sch_out;
  int sch_classes = 0;
  distill::DistillParams sch_params;
  auto* schedule = app.add_subcommand("schedule", "emit an alternating training plan");
  schedule->add_option("--net", sch_net, "network JSON")->required();
  schedule->add_option("--kind", sch_kind, "depth or width");
  schedule->add_option("--boundaries", sch_boundaries, "comma-separated cut layer ids");
  schedule->add_option("--class-count", sch_classes, "output head classes");
  schedule->add_option("--lambda", sch_params.lambda, "ground-truth weight");
  schedule->add_option("--tau", sch_params.tau, "distillation temperature");
  schedule->add_option("--alpha0", sch_params.alpha0, "initial learning rate");
  schedule->add_option("--gamma", sch_params.gamma, "early-layer decay factor");
  schedule->add_option("--epochs", sch_params.epochs, "alternating cycles per stage");
  schedule->add_option("--ladder", sch_ladder, "width fractions, e.g. 0.5,1.0");
  schedule->add_option("--out", sch_out, "schedule JSON output")->required();

  // simulate
  int sim_w = 0, sim_h = 0, sim_k = 0, sim_s = 1, sim_p = 0;
  double sim_clock = 250.0;
  bool sim_first = true;
  std::string sim_op = "conv", sim_terms, sim_trace;
  auto* simulate = app.add_subcommand("simulate", "cycle-count one streamed frame");
  simulate->add_option("--width", sim_w, "frame width")->required();
  simulate->add_option("--height", sim_h, "frame height")->required();
  simulate->add_option("--kernel", sim_k, "window size")->required();
  simulate->add_option("--stride", sim_s, "stride");
  simulate->add_option("--pad", sim_p, "padding (conv only)");
  simulate->add_option("--op", sim_op, "conv, maxpool or avgpool");
  simulate->add_option("--clock-mhz", sim_clock, "clock frequency");
  simulate->add_flag("--first,!--not-first", sim_first, "apply the input interface delay");
  simulate->add_option("--terms", sim_terms, "latency terms overrides JSON");
  simulate->add_option("--trace-csv", sim_trace, "per-cycle trace dump");

  // report
  std::string rep_front, rep_out, rep_format = "svg";
  auto* report_cmd = app.add_subcommand("report", "render a front file");
  report_cmd->add_option("--front", rep_front, "pareto.csv")->required();
  report_cmd->add_option("--out", rep_out, "output path")->required();
  report_cmd->add_option("--format", rep_format, "svg or csv");

  try {
    app.parse(argc, argv);
    if (explore->parsed()) return cmd_explore(ex);
    if (estimate->parsed()) {
      return cmd_estimate(est_net, est_device, est_terms, est_alloc, est_alloc_file);
    }
    if (morph_cmd->parsed()) {
      return cmd_morph(mo_config, mo_index, mo_mode, mo_power, mo_boundaries,
                       mo_classes, mo_manifest);
    }
    if (calibrate->parsed()) return cmd_calibrate(cal_samples, cal_out);
    if (schedule->parsed()) {
      return cmd_schedule(sch_net, sch_kind, sch_boundaries, sch_classes, sch_params,
                          sch_ladder, sch_out);
    }
    if (simulate->parsed()) {
      return cmd_simulate(sim_w, sim_h, sim_k, sim_s, sim_p, sim_op, sim_clock,
                          sim_first, sim_terms, sim_trace);
    }
    if (report_cmd->parsed()) return cmd_report(rep_front, rep_out, rep_format);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 1;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return err.exit_code();
  } catch (const json::exception& err) {
    std::cerr << "error: MalformedDocument: " << err.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: InvalidArgument: " << err.what() << "\n";
    return 1;
  } catch (const std::out_of_range& err) {
    std::cerr << "error: InvalidArgument: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return 3;
  }
  return 0;
}
