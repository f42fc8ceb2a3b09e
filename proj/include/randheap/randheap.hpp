#pragma once

#include "randheap/allocator.hpp"
#include "randheap/block_header.hpp"
#include "randheap/free_list.hpp"
#include "randheap/heap_walk.hpp"
#include "randheap/layout.hpp"
#include "randheap/locked_allocator.hpp"
#include "randheap/memory_source.hpp"
#include "randheap/metrics.hpp"
#include "randheap/posix_source.hpp"
