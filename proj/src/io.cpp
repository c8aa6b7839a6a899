#include "dbsync/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace dbsync::io {

double Archive::scalar(const std::string& name) const {
    const auto it = scalars.find(name);
    if (it == scalars.end()) throw NumericalError("archive: missing scalar " + name);
    return it->second;
}

const Matrix& Archive::matrix(const std::string& name) const {
    const auto it = matrices.find(name);
    if (it == matrices.end()) throw NumericalError("archive: missing matrix " + name);
    return it->second;
}

namespace {

void write_value(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

void write_archive(std::ostream& os, const Archive& archive) {
    for (const auto& [name, value] : archive.scalars) {
        os << "scalar " << name << ' ';
        write_value(os, value);
        os << "\n";
    }
    for (const auto& [name, mat] : archive.matrices) {
        os << "matrix " << name << ' ' << mat.rows() << ' ' << mat.cols() << "\n";
        for (Eigen::Index i = 0; i < mat.rows(); ++i) {
            for (Eigen::Index j = 0; j < mat.cols(); ++j) {
                if (j > 0) os << ',';
                write_value(os, mat(i, j));
            }
            os << "\n";
        }
    }
}

Archive read_archive(std::istream& is) {
    Archive archive;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream header(line);
        std::string kind, name;
        header >> kind >> name;
        if (kind == "scalar") {
            double value = 0.0;
            header >> value;
            archive.scalars[name] = value;
        } else if (kind == "matrix") {
            Eigen::Index rows = 0, cols = 0;
            header >> rows >> cols;
            if (rows < 0 || cols < 0) throw NumericalError("archive: bad matrix header");
            Matrix mat(rows, cols);
            for (Eigen::Index i = 0; i < rows; ++i) {
                if (!std::getline(is, line)) throw NumericalError("archive: truncated matrix " + name);
                std::stringstream row(line);
                std::string field;
                for (Eigen::Index j = 0; j < cols; ++j) {
                    if (!std::getline(row, field, ','))
                        throw NumericalError("archive: short row in matrix " + name);
                    mat(i, j) = std::stod(field);
                }
            }
            archive.matrices[name] = std::move(mat);
        } else {
            throw NumericalError("archive: unknown record kind " + kind);
        }
    }
    return archive;
}

Archive to_archive(const lmi::SyncCertificate& cert) {
    Archive archive;
    archive.scalars["margin"] = cert.margin;
    archive.scalars["agents"] = static_cast<double>(cert.K.size());
    archive.matrices["Lambda"] = cert.Lambda;
    for (std::size_t i = 0; i < cert.K.size(); ++i) {
        const std::string tag = std::to_string(i + 1);
        archive.matrices["P_" + tag] = cert.P[i];
        archive.matrices["F_" + tag] = cert.F[i];
        archive.matrices["K_" + tag] = cert.K[i];
    }
    return archive;
}

lmi::SyncCertificate certificate_from_archive(const Archive& archive) {
    lmi::SyncCertificate cert;
    cert.margin = archive.scalar("margin");
    const int agents = static_cast<int>(archive.scalar("agents"));
    cert.Lambda = archive.matrix("Lambda");
    for (int i = 1; i <= agents; ++i) {
        const std::string tag = std::to_string(i);
        cert.P.push_back(archive.matrix("P_" + tag));
        cert.F.push_back(archive.matrix("F_" + tag));
        cert.K.push_back(archive.matrix("K_" + tag));
    }
    return cert;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("write_file: cannot open " + path);
    os << contents;
    if (!os) throw IoError("write_file: write to " + path + " failed");
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("read_file: cannot open " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

}  // namespace dbsync::io
