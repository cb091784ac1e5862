#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pmac {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index; throws ValidationError when absent.
  [[nodiscard]] std::size_t column(std::string_view name) const;
  [[nodiscard]] bool has(std::string_view name) const;
};

/// Plain comma-separated values without quoting, as written by the sweeps.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

enum class FigureKind { throughput, energy, collision, density, contention };

const char* to_string(FigureKind k);
FigureKind parse_figure_kind(std::string_view name);

/// Columns a figure kind reads.
std::vector<std::string> required_columns(FigureKind kind);

/// SVG text. Versus-load figures take one series per `series` value (and per
/// node count when there are several); the density figure shows the largest
/// load against node count; the contention figure has three panels.
/// Throws ValidationError naming every missing column.
std::string render_figure(const CsvTable& table, FigureKind kind);

void emit_plot(const std::filesystem::path& csv, FigureKind kind, const std::filesystem::path& out);

}  // namespace pmac
