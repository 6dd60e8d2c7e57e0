#include "blinkwild/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "blinkwild/error.hpp"

namespace blinkwild {

namespace fs = std::filesystem;

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_pgm_token(std::istream& in) {
    std::string token;
    while (in) {
        const int c = in.peek();
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    in >> token;
    return token;
}

}  // namespace

GrayFrame read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingAsset, "cannot open " + path.string());
    if (next_pgm_token(in) != "P5") throw Error(ErrorKind::Parse, path.string() + ": not a binary PGM");
    int width = 0;
    int height = 0;
    int maxval = 0;
    try {
        width = std::stoi(next_pgm_token(in));
        height = std::stoi(next_pgm_token(in));
        maxval = std::stoi(next_pgm_token(in));
    } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, path.string() + ": malformed PGM header");
    }
    if (width < 1 || height < 1 || maxval != 255) {
        throw Error(ErrorKind::Parse, path.string() + ": unsupported PGM geometry or maxval");
    }
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw Error(ErrorKind::Parse, path.string() + ": truncated PGM data");
    }
    std::vector<double> data(raw.begin(), raw.end());
    return GrayFrame(width, height, std::move(data));
}

void write_pgm(const GrayFrame& frame, const fs::path& path) {
    std::string out = "P5\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
    out.reserve(out.size() + frame.size());
    for (double v : frame.pixels()) {
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 255.0)))));
    }
    write_file_atomic(path, out);
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw Error(ErrorKind::Numeric, "cannot format double");
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::Parse, "not a number: '" + std::string(text) + "'");
    }
    return value;
}

long long parse_int(std::string_view text) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::Parse, "not an integer: '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delimiter, start);
        if (pos == std::string_view::npos) {
            parts.push_back(line.substr(start));
            break;
        }
        parts.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingAsset, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    fs::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            out.close();
            std::error_code ignored;
            fs::remove(tmp, ignored);
            throw Error(ErrorKind::Io, "write failed for " + path.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorKind::Io, "cannot move output into place at " + path.string());
    }
}

}  // namespace blinkwild
