"""
CommunityPulse - Tests Package
"""
