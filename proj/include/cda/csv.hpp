#ifndef CDA_CSV_HPP
#define CDA_CSV_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cda
{

/// In-memory CSV table. Rendering starts with a provenance comment line
/// ("# config_hash=... seed=...") followed by the header row.
class CsvTable
{
public:
    explicit CsvTable(std::vector<std::string> columns);

    CsvTable& row(std::vector<std::string> cells);
    std::size_t rows() const { return rows_.size(); }
    const std::vector<std::string>& columns() const { return columns_; }

    std::string render(std::uint64_t config_hash, std::uint64_t seed) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// Fixed, locale-independent number formatting for reproducible output.
std::string fmt(double value, int significant = 10);
std::string fmt(std::size_t value);

/// Collects rendered files and writes them together once a command has
/// succeeded, so a failing run leaves no partial outputs.
class OutputSet
{
public:
    void add(const std::string& name, std::string content);
    const std::map<std::string, std::string>& files() const { return files_; }

    /// Writes every file under dir (created if needed) via a temporary name
    /// and rename.
    void commit(const std::filesystem::path& dir) const;

private:
    std::map<std::string, std::string> files_;
};

} // namespace cda

#endif // CDA_CSV_HPP
