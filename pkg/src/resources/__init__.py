"""Word lists and reference tables shipped with CommunityPulse."""
