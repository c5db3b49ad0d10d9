#pragma once

#include <string>
#include <vector>

#include "hypolab/config.hpp"

namespace hypolab {

/// RFC 4180 CSV writer: mandatory header, CRLF record separators, '.' decimal
/// separator, doubles rendered with 17 significant digits so files
/// round-trip and runs diff byte-for-byte.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void add_row(const std::vector<std::string>& fields);
    void add_row(const std::vector<double>& values);

    std::string str() const;
    void write(const std::string& path) const;

    static std::string format(double value);

private:
    std::size_t columns_;
    std::string body_;

    void append_record(const std::vector<std::string>& fields);
};

/// Serializers for report payloads; nlohmann objects keep keys sorted, which
/// pins the byte layout of every emitted document.
Json to_json(const SpanReport& report);
Json to_json(const CovarianceReport& report);
Json to_json(const AtomReport& report);
Json to_json(const KdeLadder& ladder);
Json to_json(const DensityReport& report);

/// One pass/fail gate in a report.
struct Gate {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;       // value compared against threshold by the caller
    std::string direction;   // "<=" or ">=" or "=="
};

Json to_json(const std::vector<Gate>& gates);
bool all_pass(const std::vector<Gate>& gates);

/// Writes text to path, creating parent directories.
void write_text_file(const std::string& path, const std::string& content);

/// Serializes a JSON document with a trailing newline, 2-space indent.
std::string render_json(const Json& doc);

}  // namespace hypolab
