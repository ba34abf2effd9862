#pragma once

// Headless command-line driver: project discovery, parallel parsing,
// subcommand dispatch and the exit-code contract.
//
//   0  success (also: zero findings, declined confirmation)
//   1  usage error
//   2  I/O failure, duplicate class, or parse notes under --strict
//   3  refactoring preconditions violated or planning failed
//   4  sources changed between planning and applying

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "psilite/docminer.hpp"
#include "psilite/envy.hpp"
#include "psilite/io.hpp"
#include "psilite/license.hpp"
#include "psilite/metrics.hpp"
#include "psilite/model.hpp"
#include "psilite/movemethod.hpp"

namespace psilite::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kRefused = 3, kStale = 4 };

inline bool skipped_directory(const std::filesystem::path& name) {
  const std::string n = name.string();
  return n == ".git" || n == "build" || n == "out" || n == "target";
}

/// All `*.java` files below `root` as '/'-separated relative paths, sorted.
inline std::vector<std::string> discover_sources(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError(root, "not a readable directory");
  std::vector<std::string> out;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw IoError(root, ec.message());
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) throw IoError(root, ec.message());
    const fs::path& p = it->path();
    if (it->is_directory(ec)) {
      if (skipped_directory(p.filename())) it.disable_recursion_pending();
      continue;
    }
    if (p.extension() == ".java" && it->is_regular_file(ec))
      out.push_back(fs::relative(p, root).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline unsigned default_jobs() {
  if (const char* env = std::getenv("PSILITE_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Reads and parses every discovered file with `jobs` workers. Results are
/// slotted by index, so the model does not depend on scheduling.
inline ProjectModel load_project(const std::filesystem::path& root, unsigned jobs) {
  const std::vector<std::string> paths = discover_sources(root);
  std::vector<std::shared_ptr<const SyntaxTree>> trees(paths.size());
  std::vector<std::exception_ptr> errors(paths.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < paths.size(); i = next++) {
      try {
        trees[i] = std::make_shared<const SyntaxTree>(parse_file(read_file(root / paths[i]), paths[i]));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(paths.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return build_model(std::move(trees), root);
}

namespace detail {

struct ProjectOptions {
  std::string root;
  unsigned jobs = 0;
  bool strict = false;
};

inline void add_project_options(CLI::App* cmd, ProjectOptions& o) {
  cmd->add_option("root", o.root, "Project root directory")->required();
  cmd->add_option("--jobs,-j", o.jobs, "Worker threads (default: $PSILITE_JOBS or CPU count)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--strict", o.strict, "Fail when any file has parse notes");
}

/// Loads the project and reports parse notes. Returns an exit code on failure.
inline std::optional<int> open_project(const ProjectOptions& o, std::ostream& err,
                                       std::optional<ProjectModel>& model) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(o.root, ec) && !fs::is_directory(o.root, ec)) {
    err << "error: " << o.root << " is not a directory\n";
    return kUsage;
  }
  model.emplace(load_project(o.root, o.jobs ? o.jobs : default_jobs()));
  std::size_t noted = 0;
  for (const auto& [path, tree] : model->files) {
    if (tree->parse_notes.empty()) continue;
    ++noted;
    if (o.strict)
      for (const auto& n : tree->parse_notes)
        err << path << ":" << tree->line_of(n.span.begin) << ": " << n.message << "\n";
  }
  if (noted) {
    err << (o.strict ? "error: " : "warning: ") << noted << " of " << model->files.size()
        << " file(s) have parse notes" << (o.strict ? "\n" : " (analyzed best-effort)\n");
    if (o.strict) return kIo;
  }
  return std::nullopt;
}

inline void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) out << text;
  else write_file(out_path, text);
}

inline ReportFormat parse_format(const std::string& f) {
  return f == "json" ? ReportFormat::Json : ReportFormat::Table;
}

inline bool affirmative(std::string answer) {
  while (!answer.empty() && (answer.back() == '\r' || answer.back() == ' ')) answer.pop_back();
  std::transform(answer.begin(), answer.end(), answer.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return answer == "y" || answer == "yes";
}

struct MoveOptions {
  ProjectOptions project;
  std::string cls, method, target;
  bool dry_run = false, apply = false, yes = false;
};

inline int move_method(const MoveOptions& o, std::istream& in, std::ostream& out, std::ostream& err) {
  if (o.dry_run == o.apply) {
    err << "error: move-method needs exactly one of --dry-run or --apply\n";
    return kUsage;
  }
  if (o.yes && !o.apply) {
    err << "error: --yes only applies to --apply\n";
    return kUsage;
  }
  std::optional<ProjectModel> model;
  if (auto code = open_project(o.project, err, model)) return *code;

  const ClassInfo* owner = model->find(o.cls);
  if (!owner) {
    err << "error: class " << o.cls << " is not in the project\n";
    return kUsage;
  }
  auto candidates = owner->methods_named(o.method);
  std::erase_if(candidates, [](const MethodInfo* m) { return m->is_constructor; });
  if (candidates.empty()) {
    err << "error: " << o.cls << " has no method " << o.method << "\n";
    return kUsage;
  }
  if (candidates.size() > 1) {
    err << "error: " << o.cls << "." << o.method << " is overloaded; overloads are not supported\n";
    return kUsage;
  }
  const MethodInfo& method = *candidates.front();

  std::string target = o.target;
  if (target.empty()) {
    auto t = envy_target(method, *model);
    if (!t) {
      err << "error: no --target given and " << o.cls << "." << o.method
          << " has no Feature Envy finding to take one from\n";
      return kRefused;
    }
    target = *t;
  }

  const auto violations = check_preconditions(method, target, *model);
  if (!violations.empty()) {
    err << "Cannot move " << o.cls << "." << o.method << " to " << target << ":\n";
    for (const auto& v : violations) {
      const auto it = model->files.find(v.path);
      const std::size_t line = it != model->files.end() ? it->second->line_of(v.span.begin) : 0;
      err << "  " << to_string(v.code) << ": " << v.message << " (" << v.path << ":" << line << ")\n";
    }
    return kRefused;
  }

  RefactoringPlan plan;
  try {
    plan = plan_move(method, target, *model);
  } catch (const PlanningFailure& e) {
    err << "Cannot move " << o.cls << "." << o.method << ": " << e.what() << "\n";
    return kRefused;
  }

  if (o.dry_run) {
    out << preview(plan, *model);
    return kOk;
  }
  if (!o.yes) {
    out << "Move " << o.cls << "." << o.method << " to " << target << "? [y/N] " << std::flush;
    std::string answer;
    std::getline(in, answer);
    if (!affirmative(answer)) {
      out << "Aborted; no files changed.\n";
      return kOk;
    }
  }
  std::map<std::string, std::string> outputs;
  try {
    outputs = execute(plan, *model);
  } catch (const StaleSources& e) {
    err << "error: " << e.what() << "; re-run to plan against the current sources\n";
    return kStale;
  } catch (const PlanningFailure& e) {
    err << "Cannot move " << o.cls << "." << o.method << ": " << e.what() << "\n";
    return kRefused;
  }
  write_outputs(outputs, model->root);
  out << "Moved " << o.cls << "." << o.method << " to " << target << " (" << plan.call_site_count
      << " call site(s) rewritten, " << outputs.size() << " file(s) changed)\n";
  return kOk;
}

}  // namespace detail

/// Runs one CLI invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
               std::ostream& err) {
  using namespace detail;
  CLI::App app{"Headless Java analysis toolkit", "psilite"};
  app.require_subcommand(1);

  ProjectOptions docs_opts;
  std::string docs_out;
  auto* docs = app.add_subcommand("mine-docs", "Extract Javadoc records as JSON");
  add_project_options(docs, docs_opts);
  docs->add_option("--out,-o", docs_out, "Output file (default: stdout)");

  ProjectOptions metrics_opts;
  std::string metrics_out, metrics_format = "table";
  auto* metrics = app.add_subcommand("metrics", "Per-class field, method and line counts");
  add_project_options(metrics, metrics_opts);
  metrics->add_option("--format", metrics_format)->check(CLI::IsMember({"table", "json"}));
  metrics->add_option("--out,-o", metrics_out, "Output file (default: stdout)");

  ProjectOptions envy_opts;
  std::string envy_out, envy_format = "table", envy_counting = "distinct";
  auto* envy = app.add_subcommand("detect-envy", "Report Feature Envy findings");
  add_project_options(envy, envy_opts);
  envy->add_option("--format", envy_format)->check(CLI::IsMember({"table", "json"}));
  envy->add_option("--out,-o", envy_out, "Output file (default: stdout)");
  envy->add_option("--counting", envy_counting)->check(CLI::IsMember({"distinct", "occurrences"}));

  MoveOptions move_opts;
  auto* move = app.add_subcommand("move-method", "Move an envious method to the class it envies");
  add_project_options(move, move_opts.project);
  move->add_option("--class", move_opts.cls, "Fully qualified name of the owning class")->required();
  move->add_option("--method", move_opts.method, "Method name")->required();
  move->add_option("--target", move_opts.target, "Target class (default: the envy finding's target)");
  move->add_flag("--dry-run", move_opts.dry_run, "Print a diff preview");
  move->add_flag("--apply", move_opts.apply, "Rewrite the files");
  move->add_flag("--yes,-y", move_opts.yes, "Do not ask for confirmation");

  std::string license_path, license_format = "text";
  double threshold = kDefaultLicenseThreshold;
  auto* license = app.add_subcommand("classify-license", "Identify MIT, BSD-3-Clause or Apache-2.0 text");
  license->add_option("path", license_path, "License file")->required();
  license->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0));
  license->add_option("--format", license_format)->check(CLI::IsMember({"text", "json"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n"
        << "run 'psilite --help' for usage\n";
    return kUsage;
  }

  try {
    std::optional<ProjectModel> model;
    if (*docs) {
      if (auto code = open_project(docs_opts, err, model)) return *code;
      emit(docs_json(extract_docs(*model), docs_opts.root), docs_out, out);
    } else if (*metrics) {
      if (auto code = open_project(metrics_opts, err, model)) return *code;
      emit(metrics_report(project_metrics(*model), parse_format(metrics_format)), metrics_out, out);
    } else if (*envy) {
      if (auto code = open_project(envy_opts, err, model)) return *code;
      const Counting mode = envy_counting == "occurrences" ? Counting::Occurrences : Counting::Distinct;
      emit(envy_report(detect_feature_envy(*model, mode), parse_format(envy_format)), envy_out, out);
    } else if (*move) {
      return move_method(move_opts, in, out, err);
    } else if (*license) {
      const LicenseMatch m = classify_license(read_file(license_path), threshold);
      out << (license_format == "json" ? license_json_report(m) : license_text_report(m));
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const DuplicateFqn& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}

}  // namespace psilite::cli
