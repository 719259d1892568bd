""" Package for timing the recording, replay and derivative sweeps of shape-tape.
    This is not a 'proper' part of the project. It may end up broken between versions. """
