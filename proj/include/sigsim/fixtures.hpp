#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigsim/languages.hpp"

namespace sigsim {

/// A named-rows-by-31-signals grid of behavior cells, the on-disk form of
/// the published matrices.
struct CellGrid {
  std::vector<std::string> row_names;
  std::vector<SignalRowCells> rows;

  const SignalRowCells& row(const std::string& name) const {
    for (std::size_t i = 0; i < row_names.size(); ++i) {
      if (row_names[i] == name) return rows[i];
    }
    throw std::out_of_range("no such grid row: " + name);
  }
};

/// Same layout with Y/N cells (default-handler presence).
struct FlagGrid {
  std::vector<std::string> row_names;
  std::vector<SignalRowFlags> rows;

  const SignalRowFlags& row(const std::string& name) const {
    for (std::size_t i = 0; i < row_names.size(); ++i) {
      if (row_names[i] == name) return rows[i];
    }
    throw std::out_of_range("no such grid row: " + name);
  }
};

struct ModeRow {
  std::string name;
  bool implicit;
  bool explicit_;
};

struct CellDiff {
  std::string row;
  int signal;
  char expected;
  char actual;
};

class FixtureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

inline std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw FixtureError("cannot open fixture file: " + path.string());
  }
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

inline void check_signal_header(const std::vector<std::string>& header,
                                const std::filesystem::path& path) {
  if (header.size() != 32) {
    throw FixtureError("bad fixture header in " + path.string());
  }
  for (int n = 1; n <= 31; ++n) {
    if (header[static_cast<std::size_t>(n)] != std::to_string(n)) {
      throw FixtureError("bad fixture header in " + path.string());
    }
  }
}

}  // namespace detail

inline CellGrid load_cell_grid(const std::filesystem::path& path) {
  auto rows = detail::read_csv(path);
  if (rows.empty()) throw FixtureError("empty fixture: " + path.string());
  detail::check_signal_header(rows.front(), path);
  CellGrid grid;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 32) {
      throw FixtureError("bad fixture row in " + path.string());
    }
    SignalRowCells cells{};
    for (int n = 1; n <= 31; ++n) {
      const std::string& f = r[static_cast<std::size_t>(n)];
      if (f.size() != 1) {
        throw FixtureError("bad cell in " + path.string() + " row " + r[0]);
      }
      cells[static_cast<std::size_t>(n - 1)] = cell_from_char(f[0]);
    }
    grid.row_names.push_back(r[0]);
    grid.rows.push_back(cells);
  }
  return grid;
}

inline FlagGrid load_flag_grid(const std::filesystem::path& path) {
  auto rows = detail::read_csv(path);
  if (rows.empty()) throw FixtureError("empty fixture: " + path.string());
  detail::check_signal_header(rows.front(), path);
  FlagGrid grid;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 32) {
      throw FixtureError("bad fixture row in " + path.string());
    }
    SignalRowFlags flags{};
    for (int n = 1; n <= 31; ++n) {
      const std::string& f = r[static_cast<std::size_t>(n)];
      if (f == "Y") {
        flags[static_cast<std::size_t>(n - 1)] = true;
      } else if (f == "N") {
        flags[static_cast<std::size_t>(n - 1)] = false;
      } else {
        throw FixtureError("bad cell in " + path.string() + " row " + r[0]);
      }
    }
    grid.row_names.push_back(r[0]);
    grid.rows.push_back(flags);
  }
  return grid;
}

inline std::vector<ModeRow> load_mode_table(const std::filesystem::path& path) {
  auto rows = detail::read_csv(path);
  if (rows.empty() || rows.front() !=
                          std::vector<std::string>{"language", "implicit", "explicit"}) {
    throw FixtureError("bad mode fixture: " + path.string());
  }
  std::vector<ModeRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 3) throw FixtureError("bad mode row in " + path.string());
    out.push_back(ModeRow{r[0], r[1] == "Y", r[2] == "Y"});
  }
  return out;
}

/// Cell-for-cell comparison, restricted to a signal range when requested.
inline std::vector<CellDiff> diff_grids(const CellGrid& expected,
                                        const CellGrid& actual, int sig_lo = 1,
                                        int sig_hi = 31) {
  std::vector<CellDiff> diffs;
  for (std::size_t i = 0; i < actual.row_names.size(); ++i) {
    const auto& exp_row = expected.row(actual.row_names[i]);
    for (int n = sig_lo; n <= sig_hi; ++n) {
      const Cell e = exp_row[static_cast<std::size_t>(n - 1)];
      const Cell a = actual.rows[i][static_cast<std::size_t>(n - 1)];
      if (e != a) {
        diffs.push_back(
            CellDiff{actual.row_names[i], n, cell_char(e), cell_char(a)});
      }
    }
  }
  return diffs;
}

inline std::vector<CellDiff> diff_flag_grids(const FlagGrid& expected,
                                             const FlagGrid& actual) {
  std::vector<CellDiff> diffs;
  for (std::size_t i = 0; i < actual.row_names.size(); ++i) {
    const auto& exp_row = expected.row(actual.row_names[i]);
    for (int n = 1; n <= 31; ++n) {
      const bool e = exp_row[static_cast<std::size_t>(n - 1)];
      const bool a = actual.rows[i][static_cast<std::size_t>(n - 1)];
      if (e != a) {
        diffs.push_back(CellDiff{actual.row_names[i], n, e ? 'Y' : 'N',
                                 a ? 'Y' : 'N'});
      }
    }
  }
  return diffs;
}

/// FNV-1a over the fixture files, embedded in reports so a divergence can be
/// attributed to code drift vs fixture drift.
inline std::uint64_t fnv1a_hash_files(
    const std::vector<std::filesystem::path>& paths) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw FixtureError("cannot open fixture file: " + p.string());
    char c;
    while (in.get(c)) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
  }
  return h;
}

inline std::string fixture_hash_hex(const std::filesystem::path& fixtures_dir) {
  const std::uint64_t h = fnv1a_hash_files({
      fixtures_dir / "table2.csv",
      fixtures_dir / "table4.csv",
      fixtures_dir / "table5.csv",
      fixtures_dir / "table6.csv",
  });
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace sigsim
