//! Holds the `acceptance` test target. It is kept in its own package so it
//! runs after every other test binary in the workspace.
