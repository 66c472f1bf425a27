#include "rct/csv_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rct {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch == '\r') {
            // tolerate CRLF
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

namespace {

bool is_sentinel(const std::string& value, const std::vector<std::string>& sentinels) {
    return std::find(sentinels.begin(), sentinels.end(), value) != sentinels.end();
}

double parse_number(const std::string& value, const std::string& column, int row) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        std::ostringstream os;
        os << "cannot parse '" << value << "' in column " << column << " at data row " << row;
        throw Error(ErrorKind::parse_failure, os.str());
    }
}

}  // namespace

TrialDataset load_dataset(const std::string& path, const CsvSchema& schema,
                          LoadDiagnostics* diagnostics) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io_error, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::parse_failure, "empty file: " + path);
    const auto header = split_csv_line(line);

    auto column_of = [&](const std::string& name) {
        for (size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return static_cast<int>(j);
        throw Error(ErrorKind::missing_column, "column '" + name + "' not found in " + path);
    };

    const int outcome_col = column_of(schema.outcome);
    const int arm_col = column_of(schema.arm);
    std::vector<int> cov_cols;
    for (const auto& c : schema.covariates) cov_cols.push_back(column_of(c));
    const size_t p = cov_cols.size();

    TrialDataset data;
    data.covariate_names = schema.covariates;
    std::vector<double> cov_values;

    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            std::ostringstream os;
            os << "data row " << row << " has " << fields.size() << " fields, header has "
               << header.size();
            throw Error(ErrorKind::parse_failure, os.str());
        }

        const std::string& yv = fields[outcome_col];
        if (is_sentinel(yv, schema.na_sentinels)) {
            data.outcome.push_back(0.0);
            data.outcome_missing.push_back(1);
        } else {
            data.outcome.push_back(parse_number(yv, schema.outcome, row));
            data.outcome_missing.push_back(0);
        }

        const std::string& zv = fields[arm_col];
        int z;
        if (!schema.arm_treated_label.empty() && zv == schema.arm_treated_label)
            z = 1;
        else if (!schema.arm_control_label.empty() && zv == schema.arm_control_label)
            z = 0;
        else if (zv == "1")
            z = 1;
        else if (zv == "0")
            z = 0;
        else {
            std::ostringstream os;
            os << "arm value '" << zv << "' at data row " << row
               << " is not 0/1 and matches no configured label";
            throw Error(ErrorKind::non_binary_arm, os.str());
        }
        data.arm.push_back(z);

        for (size_t j = 0; j < p; ++j) {
            const std::string& xv = fields[cov_cols[j]];
            if (is_sentinel(xv, schema.na_sentinels)) {
                cov_values.push_back(0.0);
                data.covariate_missing.push_back(1);
            } else {
                cov_values.push_back(parse_number(xv, schema.covariates[j], row));
                data.covariate_missing.push_back(0);
            }
        }
        ++row;
    }

    data.covariates.resize(row, static_cast<Eigen::Index>(p));
    for (int i = 0; i < row; ++i)
        for (size_t j = 0; j < p; ++j) data.covariates(i, j) = cov_values[i * p + j];

    data.validate();
    if (diagnostics) {
        diagnostics->n = data.n();
        diagnostics->n_treated = data.n_treated();
        diagnostics->n_control = data.n_control();
        diagnostics->missing_outcomes = 0;
        for (auto m : data.outcome_missing) diagnostics->missing_outcomes += m;
        diagnostics->missing_covariate_cells = 0;
        for (auto m : data.covariate_missing) diagnostics->missing_covariate_cells += m;
    }
    return data;
}

void save_dataset(const TrialDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io_error, "cannot write " + path);
    out << "outcome,arm";
    for (const auto& name : data.covariate_names) out << ',' << name;
    out << '\n';
    char buf[40];
    auto write_value = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    const int p = data.n_covariates();
    for (int i = 0; i < data.n(); ++i) {
        if (data.outcome_missing[i])
            out << "NA";
        else
            write_value(data.outcome[i]);
        out << ',' << data.arm[i];
        for (int j = 0; j < p; ++j) {
            out << ',';
            if (data.covariate_is_missing(i, j))
                out << "NA";
            else
                write_value(data.covariates(i, j));
        }
        out << '\n';
    }
}

}  // namespace rct
