#include "cda/csv.hpp"

#include "cda/common.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace cda
{

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns))
{
    if (columns_.empty())
        throw Error("CSV table needs at least one column");
}

CsvTable& CsvTable::row(std::vector<std::string> cells)
{
    if (cells.size() != columns_.size())
        throw Error("CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(columns_.size()));
    rows_.push_back(std::move(cells));
    return *this;
}

std::string CsvTable::render(std::uint64_t config_hash, std::uint64_t seed) const
{
    char head[96];
    std::snprintf(head, sizeof head, "# config_hash=%016" PRIx64 " seed=%" PRIu64 "\n", config_hash, seed);
    std::string out = head;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
        {
            if (i > 0)
                out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(columns_);
    for (const auto& r : rows_)
        line(r);
    return out;
}

std::string fmt(double value, int significant)
{
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    if (value == 0.0)
        return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", significant, value);
    return buf;
}

std::string fmt(std::size_t value) { return std::to_string(value); }

void OutputSet::add(const std::string& name, std::string content) { files_[name] = std::move(content); }

void OutputSet::commit(const std::filesystem::path& dir) const
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    for (const auto& [name, content] : files_)
    {
        const auto target = dir / name;
        const auto tmp = dir / (name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
                throw Error("cannot write " + tmp.string());
            out << content;
            if (!out)
                throw Error("write failed for " + tmp.string());
        }
        std::filesystem::rename(tmp, target, ec);
        if (ec)
            throw Error("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

} // namespace cda
