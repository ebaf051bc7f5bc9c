#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "moslabel/pipeline.hpp"

namespace httplib {
class Server;
}

namespace moslabel {

/// HTTP service over the track-stage output. Edits are validated, appended to the log and folded in
/// immediately, so a following GET sees them.
///
///   GET  /api/frames               [{frame, timestamp, points, dynamic}]
///   GET  /api/frames/{t}/points    uint32 count, then count x (3 x float32 xyz, uint32 label), little-endian
///   GET  /api/frames/{t}/tracks    tracks observed in frame t plus augmented boxes
///   POST /api/frames/{t}/edits     EditRecord JSON; 400 with {"error": reason} when rejected
///   GET  /api/summary
class ReviewService {
 public:
  explicit ReviewService(ReviewState state);
  ~ReviewService();

  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  /// Binds the socket; port 0 picks a free port. Returns the bound port, throws an io error when busy.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

  /// Current annotation of one frame (edits applied).
  ScanAnnotation annotation(std::size_t frame) const;

 private:
  void routes();

  ReviewState state_;
  ScanLoader loader_;
  AnnotationMap current_;
  std::vector<EditRecord> edits_;
  mutable std::mutex mutex_;
  std::unique_ptr<httplib::Server> server_;
};

/// Splits "host:port"; a bare port means 127.0.0.1.
std::pair<std::string, int> parse_address(const std::string& address);

}  // namespace moslabel
