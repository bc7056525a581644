#include <doctest.h>

#include <random>

#include "support/generators.hpp"
#include "versa/core/trajectory.hpp"

using namespace versa;
using namespace versa::events;

TEST_CASE("empty stream is a header-only document") {
  std::string doc = serialize_stream(std::vector<Event>{});
  CHECK(doc == "{\"format\":\"versa-trajectory\",\"version\":1}\n");
  CHECK(deserialize_stream(doc).empty());
}

TEST_CASE("three events with a screenshot round-trip") {
  EventStream s(stepping_clock(parse_rfc3339("2025-01-01T00:00:00Z"), std::chrono::seconds(1)));
  s.append(MessageBody{"open the page"}, Source::user);
  s.append(ActionBody{"browse", {{"verb", "goto"}, {"url", "http://x.test/"}}, std::string("look")}, Source::agent);
  BrowserObservation page;
  page.url = "http://x.test/";
  page.screenshot = Image{"image/png", {0x89, 'P', 'N', 'G', 0, 255}};
  page.elements.push_back(MarkedElement{"a0", "button", "Submit", BBox{1.5, 2, 30, 10}, true, true, true});
  s.append(ObservationBody::browser(page), Source::environment, 1);

  std::string doc = serialize_stream(s);
  CHECK(doc.find("\"image_b64\"") != std::string::npos);
  CHECK(doc.find("\"mime\":\"image/png\"") != std::string::npos);
  CHECK(doc.find("\"timestamp\":\"2025-01-01T00:00:02.000000Z\"") != std::string::npos);
  CHECK(deserialize_stream(doc) == s.events());
}

TEST_CASE("corruption reports the failing line") {
  EventStream s;
  s.append(MessageBody{"a"}, Source::user);
  s.append(MessageBody{"b"}, Source::user);
  std::string doc = serialize_stream(s);
  std::string cut = doc.substr(0, doc.size() - 10);  // chop the last record mid-way
  try {
    deserialize_stream(cut);
    FAIL("expected a parse error");
  } catch (const TrajectoryParseError& e) {
    CHECK(e.line() == 2);
  }
  try {
    deserialize_stream("not json\n");
    FAIL("expected a parse error");
  } catch (const TrajectoryParseError& e) {
    CHECK(e.line() == 0);
  }
  CHECK_THROWS_AS(deserialize_stream(""), TrajectoryParseError);
}

TEST_CASE("seq gaps and bad causality are rejected") {
  std::string doc = "{\"format\":\"versa-trajectory\",\"version\":1}\n"
                    "{\"seq\":1,\"source\":\"user\",\"timestamp\":\"2025-01-01T00:00:00Z\","
                    "\"body\":{\"type\":\"message\",\"text\":\"x\"}}\n";
  CHECK_THROWS_AS(deserialize_stream(doc), TrajectoryParseError);
}

TEST_CASE("random streams round-trip") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    auto evs = testing::random_stream(rng);
    REQUIRE(deserialize_stream(serialize_stream(evs)) == evs);
  }
}

TEST_CASE("rfc3339 parsing") {
  auto t = parse_rfc3339("2025-03-04T05:06:07.5+01:00");
  CHECK(format_rfc3339(t) == "2025-03-04T04:06:07.500000Z");
  CHECK_THROWS(parse_rfc3339("2025-03-04 05:06"));
  CHECK_THROWS(parse_rfc3339("2025-13-04T05:06:07Z"));
}
