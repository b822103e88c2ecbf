"""Sample workloads speaking the benchmark timing protocol.

Each module is runnable with python -m and prints TIMING/TOTAL lines,
so real-executor campaigns have something honest to measure without
shipping a full solver stack.
"""
