// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails. All thresholds are pinned below.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <streambuf>

#include <nlohmann/json.hpp>

#include "psilite/cli.hpp"
#include "support/envy_oracle.hpp"
#include "support/paths.hpp"
#include "support/tempdir.hpp"

namespace fs = std::filesystem;
using namespace psilite;
namespace pt = psilite::testing;

namespace {

// Criterion 1
constexpr std::size_t kMinCorpusFiles = 100;
constexpr double kMaxCorpusParseSeconds = 5.0;
// Criterion 2
constexpr std::uint32_t kEnvySeeds = 1000;
// Criterion 3
constexpr std::size_t kMinMoveCases = 10;
// Criterion 4
constexpr std::size_t kViolationCodeCount = 11;
// Criterion 5
constexpr double kSelfScoreTolerance = 1e-9;
constexpr double kLicenseThreshold = 0.90;
constexpr std::size_t kMinLicenseVariants = 10;
constexpr std::size_t kMinNonLicenseDocs = 20;
// Criterion 6
constexpr std::size_t kDocFixtureMethods = 12;
constexpr std::size_t kDocFixtureRecords = 7;
constexpr unsigned kParallelJobs = 8;
// Criterion 7
constexpr std::size_t kMinMetricsFixtures = 10;

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> problems;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      problems.push_back(what);
    }
  }
};

int failures = 0;

void criterion(int number, const std::string& title, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o.pass = false;
    o.problems.push_back(std::string("exception: ") + e.what());
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << number << ". " << title;
  if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
  std::cout << "\n";
  const std::size_t shown = std::min<std::size_t>(o.problems.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) std::cout << "         - " << o.problems[i] << "\n";
  if (o.problems.size() > shown) std::cout << "         - ... " << o.problems.size() - shown << " more\n";
  std::cout.flush();
}

std::vector<fs::path> java_files_below(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".java") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> subdirs(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

const MethodInfo* sole_method(const ProjectModel& m, const std::string& cls, const std::string& name) {
  const ClassInfo* c = m.find(cls);
  if (!c) return nullptr;
  auto ms = c->methods_named(name);
  return ms.size() == 1 ? ms.front() : nullptr;
}

// 1. Lossless round trip over the corpus.
Outcome round_trip() {
  Outcome o;
  const auto files = java_files_below(pt::data_dir());
  std::vector<std::string> sources;
  for (const auto& f : files) sources.push_back(read_file(f));
  std::size_t vendored = 0;
  for (const auto& f : files) vendored += f.generic_string().find("/corpus/vendor/") != std::string::npos;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<SyntaxTree> trees;
  trees.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) trees.push_back(parse_file(sources[i], files[i].string()));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::size_t exact = 0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    if (render(trees[i]) == sources[i]) ++exact;
    else o.require(false, "not byte-exact: " + files[i].string());
  }
  o.require(files.size() >= kMinCorpusFiles, "corpus has only " + std::to_string(files.size()) + " files");
  o.require(vendored > 0, "no vendored real-world files");
  o.require(secs < kMaxCorpusParseSeconds, "parse took " + std::to_string(secs) + " s");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f s", secs);
  o.detail = std::to_string(exact) + "/" + std::to_string(files.size()) + " byte-exact, " +
             std::to_string(vendored) + " vendored, parse " + buf + " < " +
             std::to_string(static_cast<int>(kMaxCorpusParseSeconds)) + " s";
  return o;
}

// 2. Envy detector against the brute-force oracle.
Outcome envy_oracle() {
  namespace gen = pt::envy_gen;
  Outcome o;
  std::size_t mismatches = 0, findings = 0;
  for (std::uint32_t seed = 1; seed <= kEnvySeeds; ++seed) {
    const auto project = gen::generate(seed);
    const auto expected = gen::oracle(project);
    std::vector<std::shared_ptr<const SyntaxTree>> trees;
    for (const auto& [path, text] : gen::files(project))
      trees.push_back(std::make_shared<const SyntaxTree>(parse_file(text, path)));
    const auto model = build_model(std::move(trees), "gen");
    std::vector<gen::Finding> got;
    for (const auto& f : detect_feature_envy(model)) {
      got.push_back({f.method.class_fqn, f.method.method, f.target, f.own_count, f.target_count});
      o.require(f.target_count > f.own_count, "non-strict finding at seed " + std::to_string(seed));
    }
    std::sort(got.begin(), got.end());
    findings += expected.size();
    if (got != expected) {
      ++mismatches;
      o.require(false, "mismatch at seed " + std::to_string(seed));
    }
  }
  o.detail = std::to_string(kEnvySeeds) + " projects, " + std::to_string(findings) + " oracle findings, " +
             std::to_string(mismatches) + " mismatches";
  return o;
}

// 3. Move Method golden suite.
Outcome move_goldens() {
  Outcome o;
  const auto cases = subdirs(pt::data_dir() / "move");
  std::size_t ok = 0, call_sites = 0, with_back_ref = 0, field_anchor = 0, param_anchor = 0, zero_sites = 0;
  for (const auto& dir : cases) {
    const std::string name = dir.filename().string();
    const auto spec = nlohmann::json::parse(read_file(dir / "case.json"));
    pt::TempDir work;
    pt::copy_tree(dir / "before", work.path());
    const ProjectModel model = cli::load_project(work.path(), 1);
    const MethodInfo* m = sole_method(model, spec["class"], spec["method"]);
    if (!m) {
      o.require(false, name + ": method not found");
      continue;
    }
    const std::string target = spec["target"];
    bool envious = false;
    for (const auto& f : detect_feature_envy(model))
      envious |= f.method.class_fqn == spec["class"] && f.method.method == spec["method"] && f.target == target;
    o.require(envious, name + ": no originating envy finding before the move");

    const RefactoringPlan plan = plan_move(*m, target, model);
    const auto outputs = execute(plan, model);
    write_outputs(outputs, work.path());
    call_sites += plan.call_site_count;
    with_back_ref += plan.needs_back_reference;
    field_anchor += std::holds_alternative<FieldAnchor>(plan.anchor);
    param_anchor += std::holds_alternative<ParameterAnchor>(plan.anchor);
    zero_sites += plan.call_site_count == 0;

    bool same = pt::snapshot(work.path()) == pt::snapshot(dir / "after");
    o.require(same, name + ": output differs from the after/ files");
    for (const auto& [path, text] : outputs) {
      const SyntaxTree t = parse_file(text, path);
      if (t.parse_notes.size() > model.files.at(path)->parse_notes.size()) {
        same = false;
        o.require(false, name + ": new parse notes in " + path);
      }
    }
    const ProjectModel after = cli::load_project(work.path(), 1);
    for (const auto& f : detect_feature_envy(after))
      if (f.method.method == spec["method"] && (f.method.class_fqn == spec["class"] || f.method.class_fqn == target)) {
        same = false;
        o.require(false, name + ": envy finding still present for " + f.method.class_fqn + "." + f.method.method);
      }
    ok += same && envious;
  }
  o.require(cases.size() >= kMinMoveCases, "only " + std::to_string(cases.size()) + " cases");
  o.require(param_anchor > 0 && field_anchor > 0 && with_back_ref > 0 && zero_sites > 0 && call_sites > 0,
            "coverage of anchors, back references and call sites is incomplete");
  o.detail = std::to_string(ok) + "/" + std::to_string(cases.size()) + " cases exact; " + std::to_string(param_anchor) +
             " parameter / " + std::to_string(field_anchor) + " field anchors, " + std::to_string(with_back_ref) +
             " back-references, " + std::to_string(call_sites) + " call sites rewritten, " +
             std::to_string(zero_sites) + " cases without call sites";
  return o;
}

// 4. One fixture per violation code, plus one eligible fixture.
Outcome preconditions() {
  Outcome o;
  std::set<std::string> covered;
  bool eligible_seen = false;
  for (const auto& dir : subdirs(pt::data_dir() / "preconditions")) {
    const std::string name = dir.filename().string();
    const auto spec = nlohmann::json::parse(read_file(dir / "case.json"));
    const ProjectModel model = cli::load_project(dir / "project", 1);
    const MethodInfo* m = sole_method(model, spec["class"], spec["method"]);
    if (!m) {
      o.require(false, name + ": method not found");
      continue;
    }
    std::set<std::string> got;
    for (const auto& v : check_preconditions(*m, spec["target"], model)) got.insert(std::string(to_string(v.code)));
    std::set<std::string> want;
    for (const auto& c : spec["expect"]) want.insert(c.get<std::string>());
    std::string listed;
    for (const auto& g : got) listed += (listed.empty() ? "" : ",") + g;
    o.require(got == want, name + ": got {" + listed + "}");
    if (want.empty()) {
      eligible_seen = true;
      o.require(got.empty(), name + ": eligible fixture is rejected");
      try {
        plan_move(*m, spec["target"], model);
      } catch (const std::exception& e) {
        o.require(false, name + ": eligible fixture fails to plan: " + e.what());
      }
    } else if (got == want) {
      covered.insert(*want.begin());
    }
  }
  o.require(covered.size() == kViolationCodeCount, "codes covered: " + std::to_string(covered.size()));
  o.require(eligible_seen, "no eligible fixture");
  o.detail = std::to_string(covered.size()) + "/" + std::to_string(kViolationCodeCount) +
             " codes triggered exactly, eligible fixture " + (eligible_seen ? "clean" : "missing");
  return o;
}

// 5. License classifier.
Outcome licenses() {
  Outcome o;
  double worst_self = 0;
  for (const auto& t : canonical_templates()) {
    const LicenseMatch m = classify_license(canonical_text(t.label), kLicenseThreshold);
    worst_self = std::max(worst_self, std::abs(m.score - 1.0));
    o.require(m.label == t.label && std::abs(m.score - 1.0) <= kSelfScoreTolerance,
              std::string(to_string(t.label)) + " does not self-classify");
  }
  double max_pair = 0;
  const auto& ts = canonical_templates();
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t j = i + 1; j < ts.size(); ++j) {
      const double s = ts[i].vector.dot(ts[j].vector);
      max_pair = std::max(max_pair, s);
      o.require(s < kLicenseThreshold, "templates too similar: " + std::string(to_string(ts[i].label)) + "/" +
                                           std::string(to_string(ts[j].label)));
    }
  std::size_t variants = 0, variants_ok = 0;
  double min_variant = 1;
  for (const auto& f : pt::files_in(pt::data_dir() / "license/variants")) {
    ++variants;
    const std::string expect = f.filename().string().substr(0, f.filename().string().find("__"));
    const LicenseMatch m = classify_license(read_file(f), kLicenseThreshold);
    min_variant = std::min(min_variant, m.score);
    const bool ok = to_string(m.label) == expect && m.score >= kLicenseThreshold;
    variants_ok += ok;
    o.require(ok, f.filename().string() + " -> " + std::string(to_string(m.label)) + " " + report::fixed4(m.score));
  }
  std::size_t docs = 0, docs_ok = 0;
  double max_doc = 0;
  for (const auto& f : pt::files_in(pt::data_dir() / "license/non_license")) {
    ++docs;
    const LicenseMatch m = classify_license(read_file(f), kLicenseThreshold);
    max_doc = std::max(max_doc, m.score);
    docs_ok += m.label == LicenseLabel::Unknown;
    o.require(m.label == LicenseLabel::Unknown, f.filename().string() + " -> " + std::string(to_string(m.label)));
  }
  o.require(variants >= kMinLicenseVariants, "too few variants");
  o.require(docs >= kMinNonLicenseDocs, "too few non-license documents");
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "self |1-score| max %.1e, max pairwise %.4f, variants %zu/%zu (min %.4f), non-license %zu/%zu "
                "Unknown (max %.4f)",
                worst_self, max_pair, variants_ok, variants, min_variant, docs_ok, docs, max_doc);
  o.detail = buf;
  return o;
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run_cli(const std::vector<std::string>& args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

// 6. Javadoc miner.
Outcome miner() {
  Outcome o;
  const fs::path root = pt::data_dir() / "docminer/project";
  const ProjectModel model = cli::load_project(root, 1);
  std::size_t methods = 0;
  for (const auto& [_, c] : model.classes)
    for (const auto& m : c.methods) methods += !m.is_constructor;
  o.require(methods == kDocFixtureMethods, "fixture has " + std::to_string(methods) + " methods");

  pt::TempDir tmp;
  std::vector<std::string> outputs;
  for (const unsigned jobs : {1u, 1u, kParallelJobs, kParallelJobs}) {
    const fs::path out = tmp.path() / ("docs-" + std::to_string(outputs.size()) + ".json");
    const CliResult r = run_cli({"mine-docs", root.string(), "--out", out.string(), "--jobs", std::to_string(jobs)});
    o.require(r.code == 0, "mine-docs exit " + std::to_string(r.code));
    outputs.push_back(read_file(out));
  }
  for (const auto& text : outputs) o.require(text == outputs.front(), "output differs between runs or job counts");

  // Golden comparison ignores the "project" field, which echoes the root argument.
  auto doc = nlohmann::json::parse(outputs.front());
  auto golden = nlohmann::json::parse(read_file(pt::data_dir() / "docminer/expected.json"));
  o.require(doc["records"] == golden["records"], "records differ from the golden file");
  const auto& records = doc["records"];
  o.require(records.is_array() && records.size() == kDocFixtureRecords,
            "record count " + std::to_string(records.size()));
  o.require(doc.is_object() && doc.size() == 2 && doc["project"].is_string(), "top-level schema");
  const std::set<std::string> keys = {"path", "class", "method", "signature", "javadoc", "line"};
  for (const auto& r : records) {
    std::set<std::string> have;
    for (const auto& [k, _] : r.items()) have.insert(k);
    o.require(have == keys, "record keys differ from the schema");
    o.require(r["line"].is_number_unsigned() && r["path"].is_string() && r["javadoc"].is_string() &&
                  !r["javadoc"].get<std::string>().empty(),
              "record field types");
  }
  o.require(!outputs.front().empty() && outputs.front().back() == '\n', "output does not end with a newline");
  o.detail = std::to_string(records.size()) + " records from " + std::to_string(methods) +
             " methods; identical across 2 runs x jobs {1," + std::to_string(kParallelJobs) + "}";
  return o;
}

// 7. Metrics against hand tallies.
Outcome metrics() {
  Outcome o;
  const auto fixtures = subdirs(pt::data_dir() / "metrics");
  std::size_t ok = 0, classes = 0;
  for (const auto& dir : fixtures) {
    const ProjectModel model = cli::load_project(dir, 1);
    const auto expected = nlohmann::json::parse(read_file(dir / "expected.json"));
    bool same = expected.size() == model.classes.size();
    for (const auto& e : expected) {
      ++classes;
      const ClassInfo* c = model.find(e["class"].get<std::string>());
      if (!c) {
        same = false;
        continue;
      }
      const MetricsRecord r = class_metrics(*c);
      same &= r.fields == e["fields"].get<std::size_t>() && r.methods == e["methods"].get<std::size_t>() &&
              r.loc == e["loc"].get<std::size_t>();
    }
    ok += same;
    o.require(same, dir.filename().string() + " differs from its tally");
  }
  o.require(fixtures.size() >= kMinMetricsFixtures, "only " + std::to_string(fixtures.size()) + " fixtures");
  o.detail = std::to_string(ok) + "/" + std::to_string(fixtures.size()) + " fixtures, " + std::to_string(classes) +
             " classes match";
  return o;
}

/// Input that edits a file at the moment the confirmation is read.
class HookedInput : public std::streambuf {
 public:
  HookedInput(std::string text, std::function<void()> hook) : text_(std::move(text)), hook_(std::move(hook)) {}

 protected:
  int_type underflow() override {
    if (fired_) return traits_type::eof();
    fired_ = true;
    hook_();
    setg(text_.data(), text_.data(), text_.data() + text_.size());
    return traits_type::to_int_type(text_[0]);
  }

 private:
  std::string text_;
  std::function<void()> hook_;
  bool fired_ = false;
};

// 8. Exit-code contract for all five subcommands.
Outcome cli_contract() {
  Outcome o;
  std::size_t checks = 0;
  auto expect = [&](const std::string& label, const std::vector<std::string>& args, int code,
                    const std::string& input = "") {
    ++checks;
    const CliResult r = run_cli(args, input);
    o.require(r.code == code, label + ": exit " + std::to_string(r.code) + ", expected " + std::to_string(code));
    return r;
  };
  pt::TempDir d;
  d.write("p/C.java", "package p;\n\nclass C {\n    int own;\n\n    int f(D d) {\n        return d.x + d.y + own;\n    }\n}\n");
  d.write("p/D.java", "package p;\n\nclass D {\n    int x;\n    int y;\n}\n");
  d.write("p/K.java", "package p;\n\nclass K {\n    int g(C c, D d) {\n        return c.f(d);\n    }\n}\n");
  pt::TempDir broken;
  broken.write("B.java", "class B { void f() {");
  const std::string root = d.str(), missing = (d.path() / "missing").string();
  const std::string out = (d.path() / "out.json").string();
  const std::string mit = (pt::resource_dir() / "licenses/MIT.txt").string();

  expect("unknown subcommand", {"frobnicate"}, 1);
  for (const std::string cmd : {"mine-docs", "metrics", "detect-envy"}) {
    expect(cmd + " ok", {cmd, root}, 0);
    expect(cmd + " usage", {cmd, root, "--bogus"}, 1);
    expect(cmd + " missing root", {cmd, missing}, 2);
    expect(cmd + " strict", {cmd, broken.str(), "--strict"}, 2);
    expect(cmd + " lenient", {cmd, broken.str()}, 0);
  }
  expect("mine-docs --out", {"mine-docs", root, "--out", out}, 0);
  expect("metrics json", {"metrics", root, "--format", "json"}, 0);
  expect("detect-envy json", {"detect-envy", root, "--format", "json"}, 0);
  expect("classify-license ok", {"classify-license", mit}, 0);
  expect("classify-license json", {"classify-license", mit, "--format", "json", "--threshold", "0.95"}, 0);
  expect("classify-license usage", {"classify-license", mit, "--format", "xml"}, 1);
  expect("classify-license missing", {"classify-license", missing}, 2);

  const std::vector<std::string> move = {"move-method", root, "--class", "p.C", "--method", "f"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> a = move;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  expect("move-method usage", with({}), 1);
  expect("move-method missing root", {"move-method", missing, "--class", "p.C", "--method", "f", "--dry-run"}, 2);
  expect("move-method violations", with({"--target", "p.K", "--dry-run"}), 3);
  const auto before = pt::snapshot(d.path());
  expect("move-method dry run", with({"--dry-run"}), 0);
  o.require(pt::snapshot(d.path()) == before, "dry run changed files");
  const CliResult declined = expect("move-method prompt declined", with({"--apply"}), 0, "n\n");
  o.require(declined.out.find("Move p.C.f to p.D? [y/N] ") == 0, "prompt text");
  o.require(pt::snapshot(d.path()) == before, "declined prompt changed files");

  {
    ++checks;
    HookedInput buf("y\n", [&] { write_file(d.path() / "p/K.java", read_file(d.path() / "p/K.java") + "\n"); });
    std::istream in(&buf);
    std::ostringstream sink, err;
    const int code = cli::run(with({"--apply"}), in, sink, err);
    o.require(code == 4, "stale sources: exit " + std::to_string(code));
  }
  write_file(d.path() / "p/K.java", before.at("p/K.java"));
  expect("move-method accepted", with({"--apply"}), 0, "y\n");
  o.require(pt::snapshot(d.path()) != before, "accepted prompt did not change files");

  {
    ++checks;
    pt::TempDir e;
    for (const auto& [rel, text] : before) e.write(rel, text);
    const std::string cmd = "echo n | " + pt::cli_path().string() + " move-method " + e.str() +
                            " --class p.C --method f --target p.K --apply >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    o.require(status != -1 && WEXITSTATUS(status) == 3, "binary exit status for violations");
  }
  o.detail = std::to_string(checks) + " invocations across 5 subcommands, exit codes 0-4 exercised";
  return o;
}

}  // namespace

int main() {
  std::cout << "psilite acceptance\n";
  criterion(1, "Round-trip losslessness over the corpus", round_trip);
  criterion(2, "Envy detector agrees with the brute-force oracle", envy_oracle);
  criterion(3, "Move Method golden suite", move_goldens);
  criterion(4, "Precondition soundness", preconditions);
  criterion(5, "License classifier", licenses);
  criterion(6, "Javadoc miner correctness and determinism", miner);
  criterion(7, "Metrics match hand tallies", metrics);
  criterion(8, "CLI exit-code contract", cli_contract);
  std::cout << (failures ? std::to_string(failures) + " criterion(s) failed\n" : "all criteria passed\n");
  return failures ? 1 : 0;
}
