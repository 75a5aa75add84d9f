// Minimal CSV helpers shared by the file formats.

#ifndef GCNET_CSV_H_
#define GCNET_CSV_H_

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcnet {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest text that parses back to the same double.
std::string FormatDouble(double v);

std::vector<std::string> SplitCsvLine(const std::string& line);

// Parses a numeric field; throws SchemaError naming the row on failure.
double ParseField(const std::string& field, int row);

std::ofstream OpenForWrite(const std::string& path);
std::ifstream OpenForRead(const std::string& path);
std::string ReadFile(const std::string& path);

}  // namespace gcnet

#endif  // GCNET_CSV_H_
