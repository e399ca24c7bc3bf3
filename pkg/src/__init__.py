"""
CommunityPulse - Growth analytics for online communities of practice

A pipeline for:
- Forum archive ingestion and monthly windowing
- Reply-network betweenness and rotating leadership
- Sentiment, emotionality and vocabulary complexity
- Panel correlations and the maturity factor
- Random-intercept growth models and reports
"""

__version__ = "1.0.0"
__license__ = "MIT"
