#pragma once

#include <string>
#include <vector>

#include "graphrfi/dataset.hpp"

namespace testutil {

inline graphrfi::UserRecord user(std::string id, graphrfi::UserLabel label = graphrfi::UserLabel::genuine,
                                 std::int64_t name_len = 8) {
  return graphrfi::UserRecord{std::move(id), name_len, label};
}

inline graphrfi::RatingEvent event(std::string uid, std::string iid, int rating,
                                   std::int64_t ts = 1500000000, std::int64_t helpful = 0,
                                   std::int64_t unhelpful = 0, int sentiment = 0,
                                   std::int64_t feedback = 10) {
  graphrfi::RatingEvent e;
  e.user_id = std::move(uid);
  e.item_id = std::move(iid);
  e.rating = rating;
  e.timestamp = ts;
  e.helpful_votes = helpful;
  e.unhelpful_votes = unhelpful;
  e.review_sentiment = sentiment;
  e.feedback_length = feedback;
  return e;
}

}  // namespace testutil
