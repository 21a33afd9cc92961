#pragma once

#include <string>
#include <vector>

#include "pointgpe/eval.hpp"

namespace pointgpe {

/// Round-trip-exact decimal rendering of a double.
std::string format_double(double value);

/// Per-class accuracy table: class_index,class_name,count,correct,accuracy.
void write_eval_csv(const std::string& path, const EvalReport& report,
                    const std::vector<std::string>& class_names);

/// C x C confusion counts, rows = true class.
void write_confusion_csv(const std::string& path, const EvalReport& report,
                         const std::vector<std::string>& class_names);

/// JSON lines: one summary object, then one object per test sample.
void write_eval_jsonl(const std::string& path, const EvalReport& report,
                      const std::vector<std::string>& class_names);

/// One row per evaluated configuration; parse_sweep_csv inverts it exactly.
void write_sweep_csv(const std::string& path, const SweepGrid& grid);
SweepGrid parse_sweep_csv(const std::string& path);

void write_bench_csv(const std::string& path, const BenchReport& report);
void write_bench_jsonl(const std::string& path, const BenchReport& report,
                       const std::vector<std::pair<std::string, std::string>>& config_echo);

}  // namespace pointgpe
