#pragma once

#include "dbsync/lmi.hpp"
#include "dbsync/types.hpp"

#include <iosfwd>
#include <map>
#include <string>

namespace dbsync::io {

/// Audit-friendly text format: named scalars and named matrices as row-major
/// CSV blocks,
///   scalar <name> <value>
///   matrix <name> <rows> <cols>
///   v,v,...                       (one line per row, 17 significant digits)
struct Archive {
    std::map<std::string, double> scalars;
    std::map<std::string, Matrix> matrices;

    double scalar(const std::string& name) const;
    const Matrix& matrix(const std::string& name) const;
    bool has_matrix(const std::string& name) const { return matrices.count(name) > 0; }
};

void write_archive(std::ostream& os, const Archive& archive);
Archive read_archive(std::istream& is);

Archive to_archive(const lmi::SyncCertificate& cert);
lmi::SyncCertificate certificate_from_archive(const Archive& archive);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace dbsync::io
