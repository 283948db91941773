#pragma once

#include <string>
#include <vector>

namespace authfeed::fixtures {

// The 2018 final as the feed publishes it (comma after "date" restored).
inline const std::string kFinal =
    R"({"id":"341576","date":"2018-07-15T18:00:00Z","local":"France","visitor":"Croatia","localGoals":4,"visitorGoals":2})";

inline const std::string kSemiFinal =
    R"({"id":"341575","date":"2018-07-11T18:00:00Z","local":"Croatia","visitor":"England","localGoals":2,"visitorGoals":1})";

inline const std::string kThirdPlace =
    R"({"id":"341574","date":"2018-07-14T14:00:00Z","local":"Belgium","visitor":"England","localGoals":2,"visitorGoals":0})";

inline const std::string kGroupDraw =
    R"({"id":"300331","date":"2018-06-16T13:00:00Z","local":"Argentina","visitor":"Iceland","localGoals":1,"visitorGoals":1})";

inline std::vector<std::string> world_cup() {
    return {kGroupDraw, kSemiFinal, kThirdPlace, kFinal};
}

} // namespace authfeed::fixtures
