"""Undocumented plumbing behind the public calls. Everything in here is
fair game to change between releases."""
