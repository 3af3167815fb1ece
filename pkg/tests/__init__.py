# This is an empty __init__.py file to make the tests directory a package.
