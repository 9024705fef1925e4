#pragma once

#include <string>
#include <vector>

#include "problem.hpp"

namespace cartan::cli {

// Line-delimited tree of key/value records.
class Report {
public:
    struct Record {
        int depth = 0;
        std::string key, value;
        bool section = false;
    };

    void put(const std::string& key, const std::string& value);
    void open(const std::string& key);
    void close();

    const std::vector<Record>& records() const { return records_; }
    // Values of every record with this key, in order.
    std::vector<std::string> values(const std::string& key) const;
    // First value for key; empty when absent.
    std::string value(const std::string& key) const;

    std::string body() const;
    // sha256 of body() as lowercase hex.
    std::string digest() const;
    // body() followed by "digest: sha256:<hex>".
    std::string text() const;

private:
    std::vector<Record> records_;
    int depth_ = 0;
};

struct Options {
    int order = -1;          // command default when negative
    int m = 0;               // 0: number of variables
    std::string priority;    // "u,p,x,q": class 1 first
    std::string stirling = "printed";
    double tol = 1e-9;
};

enum ExitCode { kOk = 0, kDiagnostic = 1, kInconsistent = 2 };

struct Outcome {
    Report report;
    int exit_code = kOk;
};

const std::vector<std::string>& commands();

// Diagnostics and module errors are recorded in the report with exit code 1.
Outcome run(const Problem& p, const std::string& command, const Options& opt = {});
Outcome run_text(const std::string& text, const std::string& command, const Options& opt = {});

} // namespace cartan::cli
