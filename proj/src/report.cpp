#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "adavar/csv.hpp"
#include "adavar/harness.hpp"

namespace adavar {

std::string format_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  auto widen = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) {
      width[i] = std::max(width[i], row[i].size());
    }
  };
  widen(header);
  for (const auto& r : rows) {
    widen(r);
  }
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string cell = i < row.size() ? row[i] : "";
      if (i > 0) {
        line += "  ";
      }
      // text left, everything else right
      if (i == 0) {
        line += cell + std::string(width[i] - cell.size(), ' ');
      } else {
        line += std::string(width[i] - cell.size(), ' ') + cell;
      }
    }
    while (!line.empty() && line.back() == ' ') {
      line.pop_back();
    }
    os << line << '\n';
  };
  emit(header);
  for (const auto& r : rows) {
    emit(r);
  }
  return os.str();
}

void report(const std::filesystem::path& dir, std::ostream& os) {
  const CsvTable summary = read_csv_file((dir / "summary.csv").string());
  os << format_table(summary.header, summary.rows);

  std::ifstream min(dir / "manifest.json");
  if (!min) {
    throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
  }
  const nlohmann::json manifest = nlohmann::json::parse(min);
  if (manifest.at("kind") == "falsifier") {
    return;  // no regret curves
  }

  // learner -> per-seed cumulative regret curves, in manifest order
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::vector<double>>> curves;
  for (const auto& run : manifest.at("runs")) {
    const std::string learner = run.at("learner").get<std::string>();
    const CsvTable t = read_csv_file((dir / run.at("file").get<std::string>()).string());
    const std::size_t col = t.column("cum_regret");
    std::vector<double> c;
    c.reserve(t.rows.size());
    for (const auto& row : t.rows) {
      c.push_back(std::stod(row.at(col)));
    }
    if (curves.find(learner) == curves.end()) {
      order.push_back(learner);
    }
    curves[learner].push_back(std::move(c));
  }

  std::ostringstream out;
  write_csv_row(out, {"k", "learner", "mean_cum_regret", "stderr"});
  for (const auto& learner : order) {
    const auto& runs = curves[learner];
    std::size_t len = runs.front().size();
    for (const auto& r : runs) {
      len = std::min(len, r.size());
    }
    std::vector<double> at_k(runs.size());
    for (std::size_t i = 0; i < len; ++i) {
      double mean = 0.0;
      for (std::size_t j = 0; j < runs.size(); ++j) {
        at_k[j] = runs[j][i];
        mean += at_k[j];
      }
      mean /= static_cast<double>(runs.size());
      write_csv_row(out, {std::to_string(i + 1), learner, format_double(mean),
                          format_double(standard_error(at_k))});
    }
  }
  write_file_atomic((dir / "curves.csv").string(), out.str());
}

}  // namespace adavar
