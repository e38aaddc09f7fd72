"""Git-style assignment submission system for classrooms.

A minimal content-addressable version control core (blobs, trees,
commits, branches, three-way merge) wrapped in an authenticated REST
submission service, a student command-line client, instructor
similarity/contribution analytics, and a benchmark harness.
"""

__version__ = "0.1.0"
