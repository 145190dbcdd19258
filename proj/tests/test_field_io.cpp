#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "eulerrough/builtin.hpp"
#include "eulerrough/field_io.hpp"

using namespace eulerrough;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("eulerrough_io_" + name)).string();
}

}  // namespace

TEST(FieldIo, ScalarRoundTripIsBitExact) {
  const ScalarField f = builtin::random_vorticity(Grid(32), 6, 4);
  const std::string path = temp_path("scalar.field");
  io::write_field(path, f);
  const ScalarField g = io::read_scalar(path);
  ASSERT_EQ(g.grid().n(), 32);
  for (std::size_t i = 0; i < f.values().size(); ++i) ASSERT_EQ(f.values()[i], g.values()[i]);
}

TEST(FieldIo, VectorRoundTripIsBitExact) {
  const VectorField u = builtin::random_velocity(Grid(16), 4, 1.0, 2);
  const std::string path = temp_path("vector.field");
  io::write_field(path, u);
  const VectorField v = io::read_vector(path);
  for (std::size_t i = 0; i < u.grid().size(); ++i) {
    ASSERT_EQ(u.x1.values()[i], v.x1.values()[i]);
    ASSERT_EQ(u.x2.values()[i], v.x2.values()[i]);
  }
  EXPECT_THROW(io::read_scalar(path), FormatError);
}

TEST(FieldIo, HeaderLineAndSize) {
  const std::string path = temp_path("header.field");
  io::write_field(path, VectorField(Grid(8)));
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, R"({"type":"vector","n":8,"version":1})");
  EXPECT_EQ(std::filesystem::file_size(path), line.size() + 1 + 2 * 64 * sizeof(double));
}

TEST(FieldIo, RejectsBadFiles) {
  const std::string path = temp_path("bad.field");
  {
    std::ofstream out(path, std::ios::binary);
    out << "not json\n";
  }
  EXPECT_THROW(io::read_field(path), FormatError);
  {
    std::ofstream out(path, std::ios::binary);
    out << R"({"type":"scalar","n":8,"version":1})" << '\n' << "short";
  }
  EXPECT_THROW(io::read_field(path), FormatError);
  {
    std::ofstream out(path, std::ios::binary);
    out << R"({"type":"tensor","n":8,"version":1})" << '\n';
  }
  EXPECT_THROW(io::read_field(path), FormatError);
  EXPECT_THROW(io::read_field(temp_path("missing.field")), Error);
}
