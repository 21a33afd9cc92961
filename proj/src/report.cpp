#include "pointgpe/report.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pointgpe {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

nlohmann::json echo_to_json(const std::vector<std::pair<std::string, std::string>>& echo) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : echo) j[key] = value;
  return j;
}

}  // namespace

std::string format_double(double value) {
  // shortest decimal form that parses back to the same double
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

void write_eval_csv(const std::string& path, const EvalReport& report,
                    const std::vector<std::string>& class_names) {
  auto out = open_out(path);
  out << "class_index,class_name,count,correct,accuracy\n";
  const int c = static_cast<int>(report.per_class_accuracy.size());
  for (int cls = 0; cls < c; ++cls) {
    out << cls << ',' << (cls < static_cast<int>(class_names.size()) ? class_names[cls] : "")
        << ',' << report.per_class_count[cls] << ',' << report.confusion(cls, cls) << ','
        << format_double(report.per_class_accuracy[cls]) << '\n';
  }
}

void write_confusion_csv(const std::string& path, const EvalReport& report,
                         const std::vector<std::string>& class_names) {
  auto out = open_out(path);
  out << "true\\predicted";
  for (int cls = 0; cls < report.confusion.cols(); ++cls)
    out << ',' << (cls < static_cast<int>(class_names.size()) ? class_names[cls]
                                                              : std::to_string(cls));
  out << '\n';
  for (int row = 0; row < report.confusion.rows(); ++row) {
    out << (row < static_cast<int>(class_names.size()) ? class_names[row] : std::to_string(row));
    for (int col = 0; col < report.confusion.cols(); ++col) out << ',' << report.confusion(row, col);
    out << '\n';
  }
}

void write_eval_jsonl(const std::string& path, const EvalReport& report,
                      const std::vector<std::string>& class_names) {
  auto out = open_out(path);
  nlohmann::json summary;
  summary["record"] = "summary";
  summary["overall_accuracy"] = report.overall_accuracy;
  summary["samples"] = report.truth.size();
  summary["wall_time_s"] = report.wall_time_s;
  summary["throughput_samples_per_s"] = report.throughput;
  summary["encode_time_s"] = report.encode_time_s;
  summary["classify_time_s"] = report.classify_time_s;
  summary["threads"] = report.threads;
  summary["config"] = echo_to_json(report.config_echo);
  out << summary.dump() << '\n';
  for (size_t i = 0; i < report.truth.size(); ++i) {
    nlohmann::json line;
    line["record"] = "sample";
    line["index"] = i;
    line["true"] = report.truth[i];
    line["predicted"] = report.predictions[i];
    if (report.truth[i] < static_cast<int>(class_names.size())) {
      line["true_name"] = class_names[report.truth[i]];
      line["predicted_name"] = class_names[report.predictions[i]];
    }
    line["top_similarity"] = report.top_similarities[i];
    out << line.dump() << '\n';
  }
}

void write_sweep_csv(const std::string& path, const SweepGrid& grid) {
  auto out = open_out(path);
  out << "axis,value,k,dim,stages,sigma,agg_mode,gamma,accuracy\n";
  for (const auto& row : grid.rows) {
    out << grid.axis << ',' << format_double(row.axis_value) << ',' << row.k << ','
        << 3 * row.refs_per_axis << ',' << row.stages << ',' << format_double(row.sigma) << ','
        << row.agg_mode << ',' << format_double(row.gamma) << ','
        << format_double(row.accuracy) << '\n';
  }
}

SweepGrid parse_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw io_error(path + ": empty sweep CSV");
  if (line != "axis,value,k,dim,stages,sigma,agg_mode,gamma,accuracy")
    throw io_error(path + ": unexpected sweep CSV header");
  SweepGrid grid;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 9)
      throw io_error(path + ":" + std::to_string(line_number) + ": expected 9 fields");
    if (grid.axis.empty()) grid.axis = fields[0];
    SweepRow row;
    row.axis_value = std::stod(fields[1]);
    row.k = std::stoi(fields[2]);
    const int dim = std::stoi(fields[3]);
    if (dim % 3 != 0)
      throw io_error(path + ":" + std::to_string(line_number) + ": dim must be a multiple of 3");
    row.refs_per_axis = dim / 3;
    row.stages = std::stoi(fields[4]);
    row.sigma = std::stod(fields[5]);
    row.agg_mode = fields[6];
    row.gamma = std::stod(fields[7]);
    row.accuracy = std::stod(fields[8]);
    grid.rows.push_back(std::move(row));
  }
  return grid;
}

void write_bench_csv(const std::string& path, const BenchReport& report) {
  auto out = open_out(path);
  out << "sample,encode_s,classify_s,total_s\n";
  for (size_t i = 0; i < report.encode_s.size(); ++i) {
    out << i << ',' << format_double(report.encode_s[i]) << ','
        << format_double(report.classify_s[i]) << ','
        << format_double(report.encode_s[i] + report.classify_s[i]) << '\n';
  }
}

void write_bench_jsonl(const std::string& path, const BenchReport& report,
                       const std::vector<std::pair<std::string, std::string>>& config_echo) {
  auto out = open_out(path);
  nlohmann::json summary;
  summary["record"] = "summary";
  summary["repeat"] = report.repeat;
  summary["warmup"] = report.warmup;
  summary["threads"] = report.threads;
  summary["wall_time_s"] = report.wall_time_s;
  summary["samples_per_s"] = report.samples_per_s;
  summary["mean_latency_s"] = report.mean_latency_s;
  summary["p50_latency_s"] = report.p50_latency_s;
  summary["p95_latency_s"] = report.p95_latency_s;
  summary["encode_total_s"] = report.encode_total_s;
  summary["classify_total_s"] = report.classify_total_s;
  summary["config"] = echo_to_json(config_echo);
  out << summary.dump() << '\n';
}

}  // namespace pointgpe
