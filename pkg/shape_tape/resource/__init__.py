""" Package for file-based resources: JSON reports, CSV traces and plain text. """

from shape_tape.resource.io import CSVTableIO, JSONDictionaryIO, TextFileIO
