#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ncp/errors.hpp"

namespace ncp {

/// %.17g round-trips every double exactly and, being locale-independent
/// here, keeps output bytes identical across runs.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

/// Write-to-temp then rename: a crash or error mid-write never leaves a
/// partial file at the destination.
inline void write_file_atomic(const std::filesystem::path &path, const std::string &content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec)
            throw IoError("cannot create directory " + path.parent_path().string() + ": " +
                          ec.message());
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw IoError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                      ec.message());
    }
}

/// Row-building helper; every output file goes through one of these so the
/// header/row discipline is uniform.
class CsvBuilder {
public:
    CsvBuilder &field(const std::string &s) {
        if (!line_empty_)
            buf_ << ',';
        buf_ << s;
        line_empty_ = false;
        return *this;
    }
    CsvBuilder &field(double v) { return field(format_double(v)); }
    CsvBuilder &field(std::int64_t v) { return field(std::to_string(v)); }
    CsvBuilder &field(std::size_t v) { return field(std::to_string(v)); }
    CsvBuilder &field(int v) { return field(static_cast<std::int64_t>(v)); }
    void endrow() {
        buf_ << '\n';
        line_empty_ = true;
    }
    std::string str() const { return buf_.str(); }

private:
    std::ostringstream buf_;
    bool line_empty_ = true;
};

/// Minimal reader for the files this project writes and for FRED-style
/// input: comma-separated, no quoting, one record per line.
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string() + " for reading");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> fields;
        std::string::size_type start = 0;
        while (true) {
            const auto pos = line.find(',', start);
            if (pos == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

} // namespace ncp
