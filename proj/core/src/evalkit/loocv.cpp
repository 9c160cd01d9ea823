#include "swct/evalkit/loocv.hpp"

#include <chrono>
#include <csignal>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "swct/evalkit/baseline.hpp"
#include "swct/volcore/parallel.hpp"
#include "swct/volcore/sequence.hpp"

namespace swct::evalkit {

namespace fs = std::filesystem;
using nlohmann::json;

LoocvPlan loocv_plan(const std::vector<std::string>& case_ids) {
  if (case_ids.size() < 2) throw DataError("too_few_cases", "leave-one-out needs at least two cases");
  std::set<std::string> seen;
  for (const auto& id : case_ids)
    if (!seen.insert(id).second) throw DataError("duplicate_case", "case id '" + id + "' appears twice");
  LoocvPlan plan;
  for (std::size_t i = 0; i < case_ids.size(); ++i) {
    Fold f;
    f.index = static_cast<int>(i);
    f.test = case_ids[i];
    for (std::size_t j = 0; j < case_ids.size(); ++j)
      if (j != i) f.train.push_back(case_ids[j]);
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

void PredictorSpec::validate() const {
  if (!(timeout_s > 0)) throw UsageError("invalid_predictor", "predictor timeout must be positive");
  if (kind != Kind::external) return;
  for (const char* p : {"{train}", "{test}", "{out}"})
    if (command.find(p) == std::string::npos)
      throw UsageError("invalid_predictor", std::string("predictor command lacks the ") + p + " placeholder");
}

PredictorSpec PredictorSpec::parse(const std::string& text) {
  PredictorSpec p;
  if (text == "builtin:baseline") p.kind = Kind::baseline;
  else if (text == "builtin:copy-truth") p.kind = Kind::copy_truth;
  else {
    p.kind = Kind::external;
    p.command = text;
  }
  p.validate();
  return p;
}

std::vector<fs::path> read_case_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("file_not_found", "cannot open case list " + path.string());
  std::vector<fs::path> out;
  try {
    json j;
    in >> j;
    const json& arr = j.is_array() ? j : j.at("cases");
    for (const auto& e : arr) out.push_back(volcore::resolve(path.parent_path(), e.get<std::string>()));
  } catch (const json::exception& e) {
    throw DataError("invalid_case_list", path.string() + ": " + e.what());
  }
  return out;
}

void write_case_list(const std::vector<fs::path>& cases, const fs::path& path) {
  json arr = json::array();
  const auto base = fs::absolute(path).parent_path().lexically_normal();
  for (const auto& c : cases) arr.push_back(fs::absolute(c).lexically_normal().lexically_relative(base).string());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("io_error", "cannot write " + path.string());
  out << json{{"cases", arr}}.dump(2) << "\n";
}

std::vector<volcore::LabelMap> read_predictions(const fs::path& out_dir, std::size_t n_frames) {
  std::vector<volcore::LabelMap> out;
  if (fs::exists(out_dir / volcore::kManifestName)) {
    auto labels = volcore::load_case_labels(out_dir);
    if (labels.size() != n_frames)
      throw DataError("prediction_frame_count", "prediction has " + std::to_string(labels.size()) + " frames, expected " +
                                                    std::to_string(n_frames));
    for (std::size_t f = 0; f < labels.size(); ++f) {
      if (!labels[f]) throw DataError("missing_prediction", "prediction manifest lacks labels for frame " + std::to_string(f));
      out.push_back(std::move(*labels[f]));
    }
    return out;
  }
  for (std::size_t f = 0; f < n_frames; ++f) {
    const auto p = out_dir / volcore::frame_labels_name(f);
    if (!fs::exists(p)) throw DataError("missing_prediction", "predictor did not write " + p.string());
    out.push_back(volcore::load_labels(p));
  }
  return out;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') q += "'\\''";
    else q += c;
  }
  return q + "'";
}

std::string substitute(std::string cmd, const std::string& key, const std::string& value) {
  for (std::size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size()))
    cmd.replace(pos, key.size(), value);
  return cmd;
}

// Runs `cmd` through /bin/sh in its own process group; kills the group on timeout.
void run_command(const std::string& cmd, const fs::path& cwd, double timeout_s, const fs::path& log) {
  const pid_t pid = fork();
  if (pid < 0) throw AlgorithmError("predictor_spawn_failed", "fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    if (!cwd.empty() && chdir(cwd.c_str()) != 0) _exit(126);
    const int fd = open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      dup2(fd, STDOUT_FILENO);
      dup2(fd, STDERR_FILENO);
      close(fd);
    }
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw AlgorithmError("predictor_spawn_failed", "waitpid failed");
    if (std::chrono::steady_clock::now() > deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw AlgorithmError("predictor_timeout", "predictor exceeded " + std::to_string(timeout_s) + " s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  if (WIFEXITED(status) && WEXITSTATUS(status) == 0) return;
  const std::string how = WIFEXITED(status) ? "exited with status " + std::to_string(WEXITSTATUS(status))
                                            : "was killed by signal " + std::to_string(WTERMSIG(status));
  throw AlgorithmError("predictor_failed", "predictor " + how + " (log: " + log.string() + ")");
}

}  // namespace

DiceReport run_loocv(const std::vector<fs::path>& case_dirs, const PredictorSpec& predictor,
                     const LoocvOptions& options) {
  predictor.validate();
  std::vector<std::string> ids;
  for (const auto& d : case_dirs) ids.push_back(volcore::read_manifest(d).case_id);
  const auto plan = loocv_plan(ids);
  const fs::path work = options.work_dir.empty() ? fs::temp_directory_path() / "swct-loocv" : options.work_dir;

  std::vector<DiceReport> parts(plan.folds.size());
  parallel_for(plan.folds.size(), options.jobs, [&](std::size_t i) {
    const auto& fold = plan.folds[i];
    FoldRecord rec;
    rec.fold = fold.index;
    rec.test_case = fold.test;
    rec.train_cases = fold.train;
    const fs::path fold_dir = work / ("fold_" + std::to_string(i));
    const fs::path test_dir = fs::absolute(case_dirs[i]);
    try {
      std::vector<fs::path> train;
      for (std::size_t j = 0; j < case_dirs.size(); ++j)
        if (j != i) train.push_back(fs::absolute(case_dirs[j]));
      fs::remove_all(fold_dir);
      fs::create_directories(fold_dir / "pred");
      write_case_list(train, fold_dir / "train.json");

      const auto gt_opt = volcore::load_case_labels(test_dir);
      std::vector<volcore::LabelMap> gt;
      for (std::size_t f = 0; f < gt_opt.size(); ++f) {
        if (!gt_opt[f]) throw DataError("missing_labels", "test case frame " + std::to_string(f) + " has no labels");
        gt.push_back(*gt_opt[f]);
      }

      std::vector<volcore::LabelMap> pred;
      switch (predictor.kind) {
        case PredictorSpec::Kind::copy_truth: pred = gt; break;
        case PredictorSpec::Kind::baseline: pred = predict_baseline(train, test_dir, 1); break;
        case PredictorSpec::Kind::external: {
          std::string cmd = predictor.command;
          cmd = substitute(cmd, "{train}", shell_quote((fold_dir / "train.json").string()));
          cmd = substitute(cmd, "{test}", shell_quote(test_dir.string()));
          cmd = substitute(cmd, "{out}", shell_quote((fold_dir / "pred").string()));
          run_command(cmd, predictor.working_dir, predictor.timeout_s, fold_dir / "predictor.log");
          pred = read_predictions(fold_dir / "pred", gt.size());
          break;
        }
      }
      const auto regions = options.regions.empty() ? regions_present(gt) : options.regions;
      parts[i] = dice_report(fold.test, gt, pred, regions, 1);
    } catch (const Error& e) {
      rec.ok = false;
      rec.error_name = e.name();
      rec.error_message = e.what();
      parts[i] = DiceReport{};
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error_name = "fold_failed";
      rec.error_message = e.what();
      parts[i] = DiceReport{};
    }
    parts[i].folds = {rec};
  });
  return pool_reports(parts);
}

}  // namespace swct::evalkit
