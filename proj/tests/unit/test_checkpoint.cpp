#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "hypball/checkpoint.hpp"
#include "hypball/errors.hpp"

using namespace hypball;
using vm::Vec;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/hypball_ckpt_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("checkpoint round trip restores exact values") {
  nn::Param w{"net.weight", {0.1, -2.5e-17, 3.14159265358979312, 1e300}};
  nn::Param b{"net.bias", {0.0, -1.0}};
  std::vector<nn::Param*> params = {&w, &b};

  TempFile tmp("roundtrip.json");
  ckpt::save_checkpoint(tmp.path, params);

  nn::Param w2{"net.weight", Vec(4, 0.0)};
  nn::Param b2{"net.bias", Vec(2, 0.0)};
  std::vector<nn::Param*> restored = {&w2, &b2};
  ckpt::load_checkpoint(tmp.path, restored);
  CHECK(w2.value == w.value);  // shortest-round-trip doubles survive exactly
  CHECK(b2.value == b.value);
}

TEST_CASE("duplicate parameter names are rejected at save time") {
  nn::Param a{"same", {1.0}};
  nn::Param b{"same", {2.0}};
  std::vector<nn::Param*> params = {&a, &b};
  CHECK_THROWS_AS(ckpt::to_map(params), UsageError);
}

TEST_CASE("loading flags missing keys, extras, and shape changes") {
  nn::Param w{"net.weight", {1.0, 2.0}};
  std::vector<nn::Param*> params = {&w};
  TempFile tmp("schema.json");
  ckpt::save_checkpoint(tmp.path, params);

  nn::Param other{"net.other", {0.0, 0.0}};
  std::vector<nn::Param*> wrong_name = {&other};
  CHECK_THROWS_AS(ckpt::load_checkpoint(tmp.path, wrong_name), SchemaError);

  nn::Param extra{"net.extra", {0.0}};
  std::vector<nn::Param*> too_many = {&w, &extra};
  CHECK_THROWS_AS(ckpt::load_checkpoint(tmp.path, too_many), SchemaError);

  nn::Param short_w{"net.weight", {0.0}};
  std::vector<nn::Param*> bad_shape = {&short_w};
  CHECK_THROWS_AS(ckpt::load_checkpoint(tmp.path, bad_shape), SchemaError);
}

TEST_CASE("corrupt checkpoint files raise parse errors") {
  TempFile tmp("corrupt.json");
  {
    std::ofstream f(tmp.path);
    f << "{not json";
  }
  CHECK_THROWS_AS(ckpt::read_checkpoint_map(tmp.path), ParseError);

  {
    std::ofstream f(tmp.path);
    f << "[1, 2, 3]";  // valid JSON, wrong shape
  }
  CHECK_THROWS_AS(ckpt::read_checkpoint_map(tmp.path), SchemaError);
}
