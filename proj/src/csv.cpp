#include "curvedress/csv.hpp"

#include <charconv>
#include <sstream>

namespace curvedress::csv {

namespace {

std::string location(const std::string& file, long line) {
    return file + ":" + std::to_string(line);
}

}  // namespace

void Row::fail(const std::string& what) const {
    throw CsvError(location(*file_, line_) + ": " + what);
}

double Row::num(std::size_t i) const {
    const std::string_view f = fields_[i];
    double v{};
    const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || p != f.data() + f.size())
        fail("expected a number, got \"" + std::string(f) + "\"");
    return v;
}

int Row::integer(std::size_t i) const {
    const std::string_view f = fields_[i];
    int v{};
    const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || p != f.data() + f.size())
        fail("expected an integer, got \"" + std::string(f) + "\"");
    return v;
}

Date Row::date(std::size_t i) const {
    const auto d = Date::parse(fields_[i]);
    if (!d)
        fail("expected an ISO date (YYYY-MM-DD), got \"" + std::string(fields_[i]) +
             "\"");
    return *d;
}

Reader::Reader(const std::filesystem::path& file,
               std::initializer_list<std::string_view> columns)
    : file_(file.string()) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw CsvError("cannot open " + file_);
    std::ostringstream ss;
    ss << in.rdbuf();
    text_ = std::move(ss).str();

    // Header.
    std::size_t eol = text_.find('\n');
    std::string_view header(text_.data(), eol == std::string::npos ? text_.size() : eol);
    if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
    std::string expected;
    for (auto c : columns) {
        if (!expected.empty()) expected += ',';
        expected += c;
    }
    if (header != expected)
        throw CsvError(location(file_, 1) + ": expected header \"" + expected +
                       "\", got \"" + std::string(header) + "\"");
    n_cols_ = columns.size();
    pos_ = eol == std::string::npos ? text_.size() : eol + 1;
    line_ = 1;
}

bool Reader::next(Row& row) {
    while (pos_ < text_.size()) {
        ++line_;
        std::size_t eol = text_.find('\n', pos_);
        if (eol == std::string::npos) eol = text_.size();
        std::string_view ln(text_.data() + pos_, eol - pos_);
        pos_ = eol + 1;
        if (!ln.empty() && ln.back() == '\r') ln.remove_suffix(1);
        if (ln.empty()) continue;

        std::vector<std::string_view> fields;
        fields.reserve(n_cols_);
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = ln.find(',', start);
            if (comma == std::string_view::npos) {
                fields.push_back(ln.substr(start));
                break;
            }
            fields.push_back(ln.substr(start, comma - start));
            start = comma + 1;
        }
        if (fields.size() != n_cols_)
            throw CsvError(location(file_, line_) + ": expected " +
                           std::to_string(n_cols_) + " fields, got " +
                           std::to_string(fields.size()));
        ++n_data_rows_;
        row = Row(std::move(fields), &file_, line_);
        return true;
    }
    return false;
}

std::string format_double(double v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

Writer::Writer(const std::filesystem::path& file,
               std::initializer_list<std::string_view> columns)
    : file_(file.string()), out_(file, std::ios::binary), n_cols_(columns.size()) {
    if (!out_) throw CsvError("cannot open " + file_ + " for writing");
    buf_.reserve(1 << 16);
    bool first = true;
    for (auto c : columns) {
        if (!first) buf_ += ',';
        buf_ += c;
        first = false;
    }
    buf_ += '\n';
}

Writer::~Writer() {
    try {
        close();
    } catch (...) {
        // Destructor swallows; call close() for error reporting.
    }
}

void Writer::sep() {
    if (col_ > 0) buf_ += ',';
    ++col_;
    if (buf_.size() > (1 << 16) - 512) {
        out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        buf_.clear();
    }
}

Writer& Writer::field(std::string_view s) {
    if (s.find_first_of(",\n\r") != std::string_view::npos)
        throw CsvError(file_ + ": refusing to write a field containing a comma or newline: \"" +
                       std::string(s) + "\"");
    sep();
    buf_ += s;
    return *this;
}

Writer& Writer::field(double v) {
    sep();
    char tmp[32];
    const auto [p, ec] = std::to_chars(tmp, tmp + sizeof tmp, v);
    (void)ec;
    buf_.append(tmp, p);
    return *this;
}

Writer& Writer::field(int v) {
    sep();
    buf_ += std::to_string(v);
    return *this;
}

Writer& Writer::field(long v) {
    sep();
    buf_ += std::to_string(v);
    return *this;
}

Writer& Writer::field(Date d) {
    sep();
    buf_ += d.to_string();
    return *this;
}

void Writer::end_row() {
    if (col_ != n_cols_)
        throw CsvError(file_ + ": row has " + std::to_string(col_) +
                       " fields, schema has " + std::to_string(n_cols_));
    buf_ += '\n';
    col_ = 0;
}

void Writer::close() {
    if (closed_) return;
    closed_ = true;
    if (!buf_.empty()) out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    buf_.clear();
    out_.flush();
    if (!out_) throw CsvError("write failure on " + file_);
    out_.close();
}

}  // namespace curvedress::csv
