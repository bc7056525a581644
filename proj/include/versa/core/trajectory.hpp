#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "versa/core/events.hpp"
#include "versa/core/json.hpp"

namespace versa::events {

inline constexpr std::string_view kTrajectoryFormat = "versa-trajectory";
inline constexpr int kTrajectoryVersion = 1;

class TrajectoryParseError : public std::runtime_error {
 public:
  TrajectoryParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }  // 0-based; the header is line 0

 private:
  std::size_t line_;
};

json to_json(const Event& event);
Event event_from_json(const json& j);

json to_json(const ObservationBody& body);
ObservationBody observation_from_json(const json& j);

json to_json(const BrowserObservation& obs);
BrowserObservation browser_observation_from_json(const json& j);

json to_json(const Image& image);
Image image_from_json(const json& j);

// Line-delimited: a header record followed by one event per line.
std::string serialize_stream(std::span<const Event> events);
std::string serialize_stream(const EventStream& stream);
std::vector<Event> deserialize_stream(std::string_view document);

void write_trajectory(const std::filesystem::path& path, std::span<const Event> events);
std::vector<Event> read_trajectory(const std::filesystem::path& path);

}  // namespace versa::events
