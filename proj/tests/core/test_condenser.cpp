#include <doctest.h>

#include <chrono>
#include <random>
#include <set>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "versa/core/condenser.hpp"

using namespace versa;
using namespace versa::events;

namespace {

std::vector<Event> stream_with_browsing_at(const std::set<Seq>& browsing, std::size_t length) {
  std::vector<Event> out;
  for (Seq i = 0; i < length; ++i) {
    if (browsing.contains(i)) {
      BrowserObservation page;
      page.url = "http://site.test/" + std::to_string(i);
      page.screenshot = Image{"image/png", {1, 2, 3}};
      ObservationBody body = ObservationBody::browser(page);
      body.cause_seq = i - 1;
      out.push_back(Event{i, Source::environment, {}, body});
    } else {
      out.push_back(Event{i, Source::agent, {}, ActionBody{"browse", {{"url", "x"}}, std::nullopt}});
    }
  }
  return out;
}

std::size_t unmasked_browsing(const CondensedView& v) {
  std::size_t n = 0;
  for (const auto& ev : v.events) {
    if (const auto* o = ev.observation(); o && o->is_browser()) ++n;
  }
  return n;
}

std::size_t count_browsing(const std::vector<Event>& events) {
  std::size_t n = 0;
  for (const auto& ev : events) {
    if (const auto* o = ev.observation(); o && o->is_browser()) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("no browsing observations means nothing to mask") {
  std::vector<Event> evs;
  evs.push_back(Event{0, Source::user, {}, MessageBody{"t"}});
  evs.push_back(Event{1, Source::agent, {}, ActionBody{"execute_bash", {{"command", "ls"}}, std::nullopt}});
  auto view = condense(evs, CondenserConfig{1});
  CHECK(view.events == evs);
  CHECK(view.masked_seqs.empty());
}

TEST_CASE("k=1 keeps only the newest page") {
  auto evs = stream_with_browsing_at({3, 7, 11}, 12);
  auto view = condense(evs, CondenserConfig{});
  CHECK(view.masked_seqs == std::vector<Seq>{3, 7});
  CHECK(view.events[11] == evs[11]);
  for (Seq s : {3, 7}) {
    const auto* obs = view.events[s].observation();
    REQUIRE(obs != nullptr);
    CHECK(obs->kind == ObservationKind::system_note);
    CHECK(obs->cause_seq == s - 1);
    CHECK(std::get<TextContent>(obs->content).text == kDefaultPlaceholder);
    CHECK(view.events[s].seq == s);
  }
}

TEST_CASE("search results are never masked") {
  std::vector<Event> evs;
  evs.push_back(Event{0, Source::agent, {}, ActionBody{"search_web", {{"query", "q"}}, std::nullopt}});
  for (Seq i = 1; i < 4; ++i) {
    auto body = ObservationBody::text(ObservationKind::search_results, "r");
    body.cause_seq = 0;
    evs.push_back(Event{i, Source::environment, {}, body});
  }
  CHECK(condense(evs, CondenserConfig{0}).events == evs);
}

TEST_CASE("empty placeholder is rejected") {
  CondenserConfig cfg{1, ""};
  CHECK_THROWS_AS(condense(std::vector<Event>{}, cfg), std::invalid_argument);
}

TEST_CASE("condense matches the single-scan oracle on random streams") {
  std::mt19937_64 rng(20250501);
  for (int trial = 0; trial < 300; ++trial) {
    auto evs = testing::random_stream(rng);
    for (std::size_t k = 0; k <= 3; ++k) {
      CondenserConfig cfg{k};
      auto view = condense(evs, cfg);
      auto expected = testing::condense_oracle(evs, k, cfg.placeholder_text);
      REQUIRE(view.events == expected);
      CHECK(unmasked_browsing(view) == std::min(k, count_browsing(evs)));
    }
  }
}

TEST_CASE("condense properties: idempotent, order-preserving, monotone in k") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto evs = testing::random_stream(rng);
    for (std::size_t k = 0; k <= 3; ++k) {
      CondenserConfig cfg{k};
      auto once = condense(evs, cfg);
      auto twice = condense(once, cfg);
      CHECK(twice.events == once.events);
      REQUIRE(once.events.size() == evs.size());
      for (std::size_t i = 0; i < evs.size(); ++i) CHECK(once.events[i].seq == evs[i].seq);

      auto wider = condense(evs, CondenserConfig{k + 1});
      std::set<Seq> narrow_masked(once.masked_seqs.begin(), once.masked_seqs.end());
      for (Seq s : wider.masked_seqs) CHECK(narrow_masked.contains(s));
    }
  }
}

TEST_CASE("masked observations carry no image") {
  auto evs = stream_with_browsing_at({1, 3, 5}, 6);
  auto view = condense(evs, CondenserConfig{1});
  std::size_t images = 0;
  for (const auto& ev : view.events) {
    if (const auto* o = ev.observation(); o && o->is_browser()) {
      if (!std::get<BrowserObservation>(o->content).screenshot.empty()) ++images;
    }
  }
  CHECK(images == 1);
}
