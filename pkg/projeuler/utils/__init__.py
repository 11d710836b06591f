# flake8: noqa
"""
Utilities mainly used by the CLI, but some are useful for users.

- `projeuler.utils.load_model` -- Loads an `SdeModel` from a user-defined Python profile, which defines either `MODEL` or `FACTORY`.
- `projeuler.utils.config` -- Reads JSON experiment documents and merges them with preset defaults and command line options.
- `projeuler.utils.artifacts` -- Writes the CSV, text, JSON and SVG files an experiment leaves in its output directory.
"""
