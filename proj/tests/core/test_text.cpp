#include <doctest.h>

#include "versa/core/bytes.hpp"
#include "versa/core/text.hpp"

using namespace versa;

TEST_CASE("base64 known vectors") {
  CHECK(base64_encode(to_bytes("")) == "");
  CHECK(base64_encode(to_bytes("f")) == "Zg==");
  CHECK(base64_encode(to_bytes("fo")) == "Zm8=");
  CHECK(base64_encode(to_bytes("foobar")) == "Zm9vYmFy");
  CHECK(to_string(base64_decode("Zm9vYg==")) == "foob");
  CHECK_THROWS(base64_decode("Zm9v!"));
}

TEST_CASE("sha256 known vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("utf8 sanitizing") {
  CHECK(text::sanitize_utf8("ok") == "ok");
  CHECK(text::sanitize_utf8("a\xFF" "b") == "a\xEF\xBF\xBD" "b");
  CHECK(text::is_valid_utf8(text::sanitize_utf8("\xC3\x28\xE2\x82")));
  CHECK(text::clean_text("a\x01\x02" "b\r\nc\td") == "ab\nc\td");
}

TEST_CASE("truncate_tail keeps whole code points") {
  std::string s = "aé" + std::string(100, 'z');
  bool t = false;
  auto out = text::truncate_tail(s, 28, &t);
  CHECK(t);
  CHECK(out.size() <= 28);
  CHECK(text::is_valid_utf8(out));
  CHECK(text::truncate_tail("short", 100) == "short");
}

TEST_CASE("occurrence counting") {
  CHECK(text::count_occurrences("a\na\n", "a") == 2);
  CHECK(text::count_occurrences("aaa", "aa") == 2);
  CHECK(text::count_occurrences("abc", "") == 0);
}
