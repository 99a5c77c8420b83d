#include "cli.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "divswap/divswapper.hpp"
#include "divswap/error.hpp"
#include "divswap/feature_map.hpp"
#include "divswap/file_util.hpp"
#include "divswap/metrics.hpp"
#include "divswap/patch_ops.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace divswap::cli {
namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

// Flags shared by every subcommand that runs a swap.
struct SwapFlags {
  int patch_size = 3;
  int stride = 1;
  double sigma_max = 0.0;
  std::string preset;
  std::string dist;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  CLI::Option* sigma_opt = nullptr;
  CLI::Option* preset_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  void add_to(CLI::App& app, bool with_sigma) {
    app.add_option("--patch-size", patch_size, "Patch side length k")
        ->check(CLI::PositiveNumber);
    app.add_option("--stride", stride, "Patch stride")->check(CLI::PositiveNumber);
    if (with_sigma) {
      sigma_opt = app.add_option("--sigma-max", sigma_max,
                                 "Upper end of the sigma sampling range");
      preset_opt = app.add_option("--preset", preset, "Named sigma range")
                       ->check(CLI::IsMember({"cnnmrf", "style-swap", "avatar-net", "wct"}));
      sigma_opt->excludes(preset_opt);
    }
    app.add_option("--dist", dist, "Sigma distribution")
        ->check(CLI::IsMember({"uniform", "normal", "none"}));
    seed_opt = app.add_option("--seed", seed, "Seed (default: $DIVSWAP_SEED or 0)");
    app.add_option("--threads", threads, "Worker threads, 0 = all cores");
  }

  std::uint64_t resolve_seed() const {
    if (seed_opt->count() > 0) return seed;
    if (const char* env = std::getenv("DIVSWAP_SEED"); env != nullptr && *env != '\0') {
      char* end = nullptr;
      errno = 0;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (errno != 0 || *end != '\0' || env[0] == '-') {
        throw UsageError(std::string("DIVSWAP_SEED is not an unsigned integer: ") + env);
      }
      return v;
    }
    return 0;
  }

  SwapConfig resolve() const {
    SwapConfig config;
    config.patch_size = patch_size;
    config.stride = stride;
    config.seed = resolve_seed();
    config.workers = threads;
    bool have_range = false;
    if (preset_opt != nullptr && preset_opt->count() > 0) {
      config.sigma_max = *preset_sigma_max(preset);
      have_range = true;
    } else if (sigma_opt != nullptr && sigma_opt->count() > 0) {
      config.sigma_max = sigma_max;
      have_range = true;
    }
    if (!dist.empty()) {
      config.distribution = parse_distribution(dist);
    } else {
      config.distribution = have_range ? Distribution::kUniform : Distribution::kNone;
    }
    if (config.distribution != Distribution::kNone && !(config.sigma_max > 0.0)) {
      throw UsageError("--dist " + std::string(to_string(config.distribution)) +
                       " needs a positive --sigma-max or a --preset");
    }
    return config;
  }
};

std::string fmt_g(double v, int digits = 9) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

std::string indexed_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "_%03zu", i);
  return buf;
}

// `--out` naming: a directory (existing, or spelled with a trailing slash)
// receives swap_000.dsfm, ...; anything else is a prefix, with a trailing
// .dsfm stripped.
fs::path output_stem(const std::string& out) {
  const bool dir_like = !out.empty() && (out.back() == '/' || fs::is_directory(out));
  if (dir_like) {
    fs::create_directories(out);
    return fs::path(out) / "swap";
  }
  fs::path p(out);
  if (p.extension() == ".dsfm") p.replace_extension();
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, text);
}

int cmd_run(const std::string& content_path, const std::string& style_path,
            const SwapFlags& flags, int num, const std::string& out, bool audit,
            std::ostream& os) {
  const SwapConfig config = flags.resolve();
  const FeatureMap content = load_feature_map(content_path);
  const FeatureMap style = load_feature_map(style_path);
  const fs::path stem = output_stem(out);

  std::optional<MatchResult> baseline;
  std::optional<PatchGrid> content_grid, style_grid;
  for (int i = 0; i < num; ++i) {
    const auto index = static_cast<std::uint64_t>(i);
    SwapResult result = div_swap(content, style, config, index);
    fs::path path = stem;
    path += indexed_name(static_cast<std::size_t>(i)) + ".dsfm";
    save_feature_map(result.output, path);
    os << path.string() << "  dist=" << to_string(config.distribution)
       << " sigma_max=" << fmt_g(config.sigma_max, 6) << " seed=" << config.seed
       << " output=" << i;

    if (audit) {
      if (!baseline) {
        content_grid = extract_patches(content, config.patch_size, config.stride);
        style_grid = extract_patches(style, config.patch_size, config.stride);
        baseline = baseline_match(*content_grid, *style_grid, config.epsilon, config.workers);
      }
      const FlipAuditReport report =
          flip_audit(*content_grid, *style_grid, *baseline, result.match, result.sigmas);
      nlohmann::ordered_json j;
      j["n_flipped"] = report.n_flipped;
      j["n_audited"] = report.n_audited;
      j["inequality_violations"] = report.inequality_violations;
      j["higher_norm_fraction"] = report.higher_norm_fraction;
      j["seed"] = config.seed;
      j["output_index"] = i;
      j["sigma_max"] = config.sigma_max;
      j["distribution"] = to_string(config.distribution);
      fs::path audit_path = stem;
      audit_path += indexed_name(static_cast<std::size_t>(i)) + ".audit.json";
      write_text_atomic(audit_path, j.dump(2) + "\n");
      os << " flipped=" << report.n_flipped << "/" << result.match.size()
         << " violations=" << report.inequality_violations
         << " higher_norm=" << fmt_g(report.higher_norm_fraction, 4);
    }
    os << '\n';
  }
  return kOk;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0' || !std::isfinite(v)) {
      throw UsageError("bad --sigma-grid entry '" + item + "'");
    }
    if (!(v > 0.0)) throw UsageError("--sigma-grid values must be positive");
    if (!grid.empty() && !(v > grid.back())) {
      throw UsageError("--sigma-grid values must be strictly increasing");
    }
    grid.push_back(v);
  }
  if (grid.empty()) throw UsageError("--sigma-grid is empty");
  return grid;
}

int cmd_sweep(const std::string& content_path, const std::string& style_path,
              const SwapFlags& flags, const std::string& grid_text, int num,
              const std::string& out_dir, std::ostream& os) {
  const std::vector<double> grid = parse_grid(grid_text);
  if (num < 2) throw UsageError("--num must be at least 2 to measure diversity");
  SwapConfig config = flags.resolve();
  if (flags.dist.empty()) config.distribution = Distribution::kUniform;
  if (config.distribution == Distribution::kNone) {
    throw UsageError("sweep needs --dist uniform or normal");
  }
  const FeatureMap content = load_feature_map(content_path);
  const FeatureMap style = load_feature_map(style_path);

  std::string csv = "sigma_max,mean_feature_distance\n";
  for (double sigma_max : grid) {
    config.sigma_max = sigma_max;
    std::vector<FeatureMap> outputs;
    outputs.reserve(static_cast<std::size_t>(num));
    for (int i = 0; i < num; ++i) {
      outputs.push_back(div_swap(content, style, config, static_cast<std::uint64_t>(i)).output);
    }
    const DiversityReport report = pairwise_report(outputs, config.workers);
    csv += fmt_g(sigma_max) + "," + fmt_g(report.mean) + "\n";
  }
  os << csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text_atomic(fs::path(out_dir) / "sweep.csv", csv);
  }
  return kOk;
}

std::vector<fs::path> collect_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(in)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".png" || ext == ".dsfm")) {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      files.emplace_back(in);
    } else {
      throw IoError("no such file or directory: " + in);
    }
  }
  return files;
}

int cmd_metrics(const std::vector<std::string>& inputs, const std::string& kind_text,
                bool json, unsigned threads, std::ostream& os) {
  const std::vector<fs::path> files = collect_inputs(inputs);
  if (files.size() < 2) {
    throw UsageError("metrics needs at least two inputs, found " +
                     std::to_string(files.size()));
  }
  const auto all_ext = [&](const char* ext) {
    return std::all_of(files.begin(), files.end(),
                       [&](const fs::path& p) { return p.extension() == ext; });
  };
  DistanceKind kind;
  if (kind_text == "pixel") {
    kind = DistanceKind::kPixel;
  } else if (kind_text == "feature") {
    kind = DistanceKind::kFeature;
  } else if (all_ext(".png")) {
    kind = DistanceKind::kPixel;
  } else if (all_ext(".dsfm")) {
    kind = DistanceKind::kFeature;
  } else {
    throw UsageError("mixed input types; pass --kind pixel or --kind feature");
  }

  DiversityReport report;
  if (kind == DistanceKind::kPixel) {
    std::vector<RgbImage> images;
    for (const auto& f : files) images.push_back(read_png(f));
    report = pairwise_report(images, threads);
  } else {
    std::vector<FeatureMap> maps;
    for (const auto& f : files) maps.push_back(load_feature_map(f));
    report = pairwise_report(maps, threads);
  }
  os << (json ? format_report_json(report) + "\n" : format_report_text(report));
  return kOk;
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  unsigned long w = 0, h = 0;
  char x = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lu%c%lu%c", &w, &x, &h, &tail) != 3 ||
      (x != 'x' && x != 'X') || w == 0 || h == 0) {
    throw UsageError("--size must look like WIDTHxHEIGHT, got '" + text + "'");
  }
  return {w, h};
}

int cmd_heatmap(const std::string& in, const std::string& out,
                const std::string& size_text, std::ostream& os) {
  const FeatureMap map = load_feature_map(in);
  std::size_t w = map.width();
  std::size_t h = map.height();
  if (!size_text.empty()) std::tie(w, h) = parse_size(size_text);
  write_png(heatmap(map, w, h), out);
  os << out << "  " << w << "x" << h << '\n';
  return kOk;
}

int cmd_match_table(const std::string& content_path, const std::string& style_path,
                    const std::string& out, const SwapFlags& flags,
                    std::uint64_t output_index, std::ostream& os) {
  const SwapConfig config = flags.resolve();
  const FeatureMap content = load_feature_map(content_path);
  const FeatureMap style = load_feature_map(style_path);
  const SwapResult result = div_swap(content, style, config, output_index);
  std::ostringstream csv;
  write_match_csv(result.match, csv);
  write_text_atomic(out, csv.str());
  os << out << "  " << result.match.size() << " rows\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diversified patch-based style swapping on .dsfm feature maps", "divswap"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "Generate N diversified swaps");
  std::string run_content, run_style, run_out = "swap";
  int run_num = 1;
  bool run_audit = false;
  SwapFlags run_flags;
  run_cmd->add_option("content", run_content, "Content .dsfm")->required();
  run_cmd->add_option("style", run_style, "Style .dsfm")->required();
  run_flags.add_to(*run_cmd, true);
  run_cmd->add_option("--num", run_num, "Number of outputs")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", run_out, "Output directory or file prefix");
  run_cmd->add_flag("--audit", run_audit, "Write a flip-audit JSON per output");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Mean feature diversity per sigma_max");
  std::string sweep_content, sweep_style, sweep_grid, sweep_out;
  int sweep_num = 20;
  SwapFlags sweep_flags;
  sweep_cmd->add_option("content", sweep_content, "Content .dsfm")->required();
  sweep_cmd->add_option("style", sweep_style, "Style .dsfm")->required();
  sweep_flags.add_to(*sweep_cmd, false);
  sweep_cmd->add_option("--sigma-grid", sweep_grid, "Comma-separated sigma_max values")
      ->required();
  sweep_cmd->add_option("--num", sweep_num, "Outputs per grid point");
  sweep_cmd->add_option("--out", sweep_out, "Directory for sweep.csv");

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "Pairwise diversity of a set of outputs");
  std::vector<std::string> metrics_inputs;
  std::string metrics_kind;
  bool metrics_json = false;
  unsigned metrics_threads = 0;
  metrics_cmd->add_option("inputs", metrics_inputs, "Files or directories")->required();
  metrics_cmd->add_option("--kind", metrics_kind, "pixel or feature (default: by extension)")
      ->check(CLI::IsMember({"pixel", "feature"}));
  metrics_cmd->add_flag("--json", metrics_json, "Print a single-line JSON object");
  metrics_cmd->add_option("--threads", metrics_threads, "Worker threads, 0 = all cores");

  // heatmap
  auto* heat_cmd = app.add_subcommand("heatmap", "Render a channel-norm heat map PNG");
  std::string heat_in, heat_out, heat_size;
  heat_cmd->add_option("input", heat_in, "Feature map .dsfm")->required();
  heat_cmd->add_option("output", heat_out, "Output .png")->required();
  heat_cmd->add_option("--size", heat_size, "Output size WIDTHxHEIGHT");

  // match-table
  auto* table_cmd = app.add_subcommand("match-table", "Dump the patch assignment table");
  std::string table_content, table_style, table_out;
  std::uint64_t table_index = 0;
  SwapFlags table_flags;
  table_cmd->add_option("content", table_content, "Content .dsfm")->required();
  table_cmd->add_option("style", table_style, "Style .dsfm")->required();
  table_cmd->add_option("output", table_out, "Output .csv")->required();
  table_flags.add_to(*table_cmd, true);
  table_cmd->add_option("--output-index", table_index,
                        "Sigma stream index (matches run's output number)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) {
      return cmd_run(run_content, run_style, run_flags, run_num, run_out, run_audit, out);
    }
    if (*sweep_cmd) {
      return cmd_sweep(sweep_content, sweep_style, sweep_flags, sweep_grid, sweep_num,
                       sweep_out, out);
    }
    if (*metrics_cmd) {
      return cmd_metrics(metrics_inputs, metrics_kind, metrics_json, metrics_threads, out);
    }
    if (*heat_cmd) return cmd_heatmap(heat_in, heat_out, heat_size, out);
    if (*table_cmd) {
      return cmd_match_table(table_content, table_style, table_out, table_flags,
                             table_index, out);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DimensionError& e) {
    err << "dimension error: " << e.what() << '\n';
    return kDimension;
  } catch (const ConsistencyError& e) {
    err << "dimension error: " << e.what() << '\n';
    return kDimension;
  } catch (const Error& e) {
    err << "file error: " << e.what() << '\n';
    return kFileFormat;
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << '\n';
    return kFileFormat;
  }
  return kUsage;
}

}  // namespace divswap::cli
