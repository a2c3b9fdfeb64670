#include "epcag/report.hpp"

#include "epcag/error.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

namespace epcag {

std::string format_real(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string utc_stamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

std::string file_token(std::string_view s) {
    std::string out;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || c == '.' || c == '_' || c == '-') {
            out.push_back(static_cast<char>(std::tolower(u)));
        } else {
            out.push_back('-');
        }
    }
    return out.empty() ? "unnamed" : out;
}

nlohmann::json json_real(double x) {
    if (!std::isfinite(x)) {
        return nullptr;
    }
    return x;
}

ArtifactWriter::ArtifactWriter(std::filesystem::path dir, std::string command, std::string problem,
                               std::string stamp)
    : dir_(std::move(dir)), command_(std::move(command)), problem_(std::move(problem)), stamp_(std::move(stamp)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) {
        throw Error("cannot create output directory " + dir_.string() + (ec ? ": " + ec.message() : ""));
    }
}

std::filesystem::path ArtifactWriter::path(const std::string& ext, const std::string& part) const {
    std::string name = file_token(command_) + "-" + file_token(problem_) + "-" + file_token(stamp_);
    if (!part.empty()) {
        name += "-" + file_token(part);
    }
    return dir_ / (name + "." + ext);
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + p.string());
    }
    out << text;
    if (!out) {
        throw Error("write failed for " + p.string());
    }
}

}  // namespace

std::filesystem::path ArtifactWriter::write_csv(const CsvRow& header, const std::vector<CsvRow>& rows,
                                                const std::string& part) const {
    std::string text;
    const auto line = [&text](const CsvRow& r) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) {
                text += ',';
            }
            text += r[i];
        }
        text += '\n';
    };
    line(header);
    for (const auto& r : rows) {
        line(r);
    }
    const auto p = path("csv", part);
    write_text(p, text);
    return p;
}

std::filesystem::path ArtifactWriter::write_json(nlohmann::json body) const {
    body["schema"] = kReportSchema;
    body["command"] = command_;
    body["problem"] = problem_;
    body["timestamp"] = stamp_;
    const auto p = path("json");
    write_text(p, body.dump(2) + "\n");
    return p;
}

}  // namespace epcag
