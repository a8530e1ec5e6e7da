#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "curvedress/date.hpp"
#include "curvedress/errors.hpp"

namespace curvedress::csv {

/// Minimal CSV support for the pinned file schemas: comma-separated, one
/// header row, no quoting (no field we read or write ever contains a comma).

/// One parsed data row with positional typed accessors. Accessors throw
/// CsvError carrying file:line and the offending text.
class Row {
  public:
    Row(std::vector<std::string_view> fields, const std::string* file, long line)
        : fields_(std::move(fields)), file_(file), line_(line) {}

    std::size_t size() const { return fields_.size(); }
    std::string_view raw(std::size_t i) const { return fields_[i]; }
    std::string str(std::size_t i) const { return std::string(fields_[i]); }
    double num(std::size_t i) const;
    int integer(std::size_t i) const;
    Date date(std::size_t i) const;
    long line() const { return line_; }

    [[noreturn]] void fail(const std::string& what) const;

  private:
    std::vector<std::string_view> fields_;
    const std::string* file_;
    long line_;
};

/// Reads the whole file up front and validates the header against the exact
/// expected column names. Rows are exposed for a single forward pass.
class Reader {
  public:
    Reader(const std::filesystem::path& file,
           std::initializer_list<std::string_view> columns);

    /// False once the file is exhausted; otherwise fills `row`.
    bool next(Row& row);

    const std::string& filename() const { return file_; }
    long data_rows() const { return n_data_rows_; }

  private:
    std::string file_;
    std::string text_;
    std::size_t pos_ = 0;
    long line_ = 1;  // header consumed in the constructor
    long n_data_rows_ = 0;
    std::size_t n_cols_ = 0;
};

/// Buffered writer; doubles are rendered with std::to_chars shortest
/// round-trip form so re-reading reproduces values bit-exactly.
class Writer {
  public:
    Writer(const std::filesystem::path& file,
           std::initializer_list<std::string_view> columns);
    ~Writer();

    Writer& field(std::string_view s);
    Writer& field(double v);
    Writer& field(int v);
    Writer& field(long v);
    Writer& field(Date d);
    void end_row();

    /// Flushes and closes; throws on IO failure. Called by the destructor,
    /// but errors are only reportable when invoked explicitly.
    void close();

  private:
    void sep();

    std::string file_;
    std::ofstream out_;
    std::string buf_;
    std::size_t n_cols_;
    std::size_t col_ = 0;
    bool closed_ = false;
};

/// Shortest round-trip decimal rendering of a double (std::to_chars).
std::string format_double(double v);

}  // namespace curvedress::csv
