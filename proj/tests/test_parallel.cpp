#include <gtest/gtest.h>

#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "spinlind/parallel.hpp"

using namespace spinlind;

TEST(Parallel, EveryIndexOnce) {
    for (unsigned threads : {1u, 3u, 8u}) {
        std::vector<int> hits(1000, 0);
        parallel_for(hits.size(), threads, [&](std::size_t k) { hits[k] += 1; });
        for (int h : hits) EXPECT_EQ(h, 1);
    }
}

TEST(Parallel, LowestFailingIndexWins) {
    for (unsigned threads : {1u, 4u}) {
        try {
            parallel_for(100, threads, [](std::size_t k) {
                if (k == 73 || k == 41 || k == 90) throw std::runtime_error(std::to_string(k));
            });
            FAIL();
        } catch (const std::runtime_error& e) {
            EXPECT_STREQ(e.what(), "41");
        }
    }
}

TEST(Parallel, ThreadResolution) {
    EXPECT_EQ(resolve_threads(5), 5u);
    setenv("SPINLIND_THREADS", "3", 1);
    EXPECT_EQ(resolve_threads(0), 3u);
    setenv("SPINLIND_THREADS", "0", 1);
    EXPECT_GE(resolve_threads(0), 1u);
    unsetenv("SPINLIND_THREADS");
}
